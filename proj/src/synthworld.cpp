#include "wsod/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>

#include "wsod/config.hpp"
#include "wsod/rng.hpp"

namespace wsod {

void WorldConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ValidationError(std::string("world config: ") + msg);
  };
  require(feature_dim >= n_source_cats + n_target_cats,
          "feature_dim must be >= n_source_cats + n_target_cats");
  require(n_source_cats > 0 && n_target_cats > 0, "category counts must be positive");
  require(prototype_affinity >= 0.0 && prototype_affinity <= 1.0,
          "prototype_affinity must be in [0, 1]");
  require(feature_noise_sigma >= 0.0, "feature_noise_sigma must be >= 0");
  require(n_background_prototypes >= 1, "n_background_prototypes must be >= 1");
  require(background_strength >= 0.0, "background_strength must be >= 0");
  require(background_sigma >= 0.0, "background_sigma must be >= 0");
  require(context_boxes_per_object >= 0, "context_boxes_per_object must be >= 0");
  require(extra_context_box_prob >= 0.0 && extra_context_box_prob <= 1.0,
          "extra_context_box_prob must be in [0, 1]");
  require(context_strength >= 0.0, "context_strength must be >= 0");
  require(objects_per_image_min >= 0 && objects_per_image_max >= objects_per_image_min,
          "objects_per_image range invalid");
  require(n_source_images > 0 && n_target_train_images > 0 && n_target_test_images > 0,
          "image counts must be positive");
  require(leak_rate >= 0.0 && leak_rate <= 1.0, "leak_rate must be in [0, 1]");
  require(jitter_sigma >= 0.0, "jitter_sigma must be >= 0");
  require(jitters_per_object >= 0, "jitters_per_object must be >= 0");
  require(distractors_per_image >= 0, "distractors_per_image must be >= 0");
  require(image_size > 0.0, "image_size must be positive");
}

namespace {

Eigen::MatrixXd build_prototypes(const WorldConfig& cfg) {
  const int d = cfg.feature_dim;
  const int ns = cfg.n_source_cats;
  const int nt = cfg.n_target_cats;
  Rng rng(derive_seed(cfg.seed, "prototypes"));

  // Orthonormal basis: ns source directions plus nt spare directions used to
  // rotate each target prototype away from its paired source prototype.
  Eigen::MatrixXd basis(d, ns + nt);
  for (int c = 0; c < basis.cols(); ++c) {
    for (int r = 0; r < d; ++r) basis(r, c) = rng.gauss();
  }
  for (int c = 0; c < basis.cols(); ++c) {
    for (int pass = 0; pass < 2; ++pass) {  // modified Gram-Schmidt, twice
      for (int k = 0; k < c; ++k) {
        basis.col(c) -= basis.col(k).dot(basis.col(c)) * basis.col(k);
      }
    }
    const double n = basis.col(c).norm();
    if (n < 1e-10) throw std::runtime_error("degenerate prototype basis");
    basis.col(c) /= n;
  }

  const double a = cfg.prototype_affinity;
  const double b = std::sqrt(std::max(0.0, 1.0 - a * a));
  Eigen::MatrixXd protos(d, nt + ns);
  for (int j = 0; j < nt; ++j) {
    const int pair = rng.uniform_int(0, ns - 1);
    protos.col(j) = a * basis.col(pair) + b * basis.col(ns + j);
  }
  for (int c = 0; c < ns; ++c) protos.col(nt + c) = basis.col(c);
  return protos;
}

Eigen::MatrixXd build_background_prototypes(const WorldConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, "background"));
  Eigen::MatrixXd protos(cfg.feature_dim, cfg.n_background_prototypes);
  for (int c = 0; c < protos.cols(); ++c) {
    for (int r = 0; r < protos.rows(); ++r) protos(r, c) = rng.gauss();
    protos.col(c).normalize();
  }
  return protos;
}

BBox random_box(Rng& rng, double width, double height) {
  const double w = width * rng.uniform(0.10, 0.35);
  const double h = height * rng.uniform(0.10, 0.35);
  const double x1 = rng.uniform(0.0, width - w);
  const double y1 = rng.uniform(0.0, height - h);
  return BBox(x1, y1, x1 + w, y1 + h);
}

std::string padded_id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%04d", prefix, i);
  return buf;
}

Annotation object_annotation(const BBox& box, int category) {
  return Annotation{box, category, Origin::original, std::nullopt};
}

}  // namespace

World World::generate(const WorldConfig& cfg) {
  cfg.validate();
  World w;
  w.cfg_ = cfg;
  w.prototypes_ = build_prototypes(cfg);
  w.bg_prototypes_ = build_background_prototypes(cfg);

  std::vector<std::string> names;
  for (int j = 0; j < cfg.n_target_cats; ++j) names.push_back("target_" + std::to_string(j));
  for (int c = 0; c < cfg.n_source_cats; ++c) names.push_back("source_" + std::to_string(c));

  const double sz = cfg.image_size;

  w.source_train_.categories = names;
  w.source_train_.split = Split::source_train;
  for (int i = 0; i < cfg.n_source_images; ++i) {
    Rng rng(derive_seed(cfg.seed, "img_src", static_cast<std::uint64_t>(i)));
    ImageRecord img;
    img.id = padded_id("src_", i);
    img.domain = Domain::source;
    img.width = sz;
    img.height = sz;
    const int n = rng.uniform_int(cfg.objects_per_image_min, cfg.objects_per_image_max);
    for (int k = 0; k < n; ++k) {
      const int cat = cfg.n_target_cats + rng.uniform_int(0, cfg.n_source_cats - 1);
      const BBox box = random_box(rng, sz, sz);
      img.annotations.push_back(object_annotation(box, cat));
      img.hidden_gt.push_back(object_annotation(box, cat));
    }
    // Leaked target object: present in the image, absent from annotations.
    if (rng.bernoulli(cfg.leak_rate)) {
      const int cat = rng.uniform_int(0, cfg.n_target_cats - 1);
      img.hidden_gt.push_back(object_annotation(random_box(rng, sz, sz), cat));
    }
    w.source_train_.images.push_back(std::move(img));
  }

  auto make_target = [&](Dataset& ds, Split split, const char* prefix, int count,
                         const char* stream, bool with_labels) {
    ds.categories = names;
    ds.split = split;
    for (int i = 0; i < count; ++i) {
      Rng rng(derive_seed(cfg.seed, stream, static_cast<std::uint64_t>(i)));
      ImageRecord img;
      img.id = padded_id(prefix, i);
      img.domain = Domain::target;
      img.width = sz;
      img.height = sz;
      const int n = std::max(1, rng.uniform_int(cfg.objects_per_image_min,
                                                cfg.objects_per_image_max));
      std::set<int> cats;
      for (int k = 0; k < n; ++k) {
        const int cat = rng.uniform_int(0, cfg.n_target_cats - 1);
        img.hidden_gt.push_back(object_annotation(random_box(rng, sz, sz), cat));
        cats.insert(cat);
      }
      if (with_labels) img.labels.assign(cats.begin(), cats.end());
      ds.images.push_back(std::move(img));
    }
  };
  make_target(w.target_train_, Split::target_train, "tgt_", cfg.n_target_train_images,
              "img_tgt", true);
  make_target(w.target_test_, Split::target_test, "tst_", cfg.n_target_test_images,
              "img_tst", false);

  validate_dataset(w.source_train_);
  validate_dataset(w.target_train_);
  validate_dataset(w.target_test_);
  return w;
}

World World::attach(const WorldConfig& cfg, Dataset source_train, Dataset target_train,
                    Dataset target_test) {
  cfg.validate();
  for (const Dataset* ds : {&source_train, &target_train, &target_test}) {
    validate_dataset(*ds);
    if (static_cast<int>(ds->categories.size()) != cfg.total_categories()) {
      throw ValidationError("attach: dataset category count does not match world config");
    }
  }
  World w;
  w.cfg_ = cfg;
  w.prototypes_ = build_prototypes(cfg);
  w.bg_prototypes_ = build_background_prototypes(cfg);
  w.source_train_ = std::move(source_train);
  w.target_train_ = std::move(target_train);
  w.target_test_ = std::move(target_test);
  return w;
}

Eigen::VectorXd World::object_feature(const ImageRecord& img, int object_index) const {
  const Annotation& ann = img.hidden_gt.at(static_cast<std::size_t>(object_index));
  Rng rng(derive_seed(derive_seed(cfg_.seed, img.id), "objfeat",
                      static_cast<std::uint64_t>(object_index)));
  Eigen::VectorXd f = prototypes_.col(ann.category);
  for (int r = 0; r < f.size(); ++r) f[r] += cfg_.feature_noise_sigma * rng.gauss();
  return f;
}

std::vector<Candidate> World::candidates(const ImageRecord& img) const {
  Rng rng(derive_seed(derive_seed(cfg_.seed, img.id), "candidates"));
  const int n_obj = static_cast<int>(img.hidden_gt.size());

  std::vector<Eigen::VectorXd> obj_feats(n_obj);
  for (int k = 0; k < n_obj; ++k) obj_feats[k] = object_feature(img, k);

  std::vector<BBox> boxes;
  std::vector<int> context_of;  // parallel: owning object index, -1 for ordinary boxes
  for (int k = 0; k < n_obj; ++k) {
    const BBox& b = img.hidden_gt[k].bbox;
    boxes.push_back(b);
    context_of.push_back(-1);
    const double bw = b.width(), bh = b.height();
    for (int j = 0; j < cfg_.jitters_per_object; ++j) {
      const double x1 = b.x1 + cfg_.jitter_sigma * bw * rng.gauss();
      const double y1 = b.y1 + cfg_.jitter_sigma * bh * rng.gauss();
      const double x2 = b.x2 + cfg_.jitter_sigma * bw * rng.gauss();
      const double y2 = b.y2 + cfg_.jitter_sigma * bh * rng.gauss();
      const double cx1 = std::clamp(x1, 0.0, img.width);
      const double cy1 = std::clamp(y1, 0.0, img.height);
      const double cx2 = std::clamp(x2, 0.0, img.width);
      const double cy2 = std::clamp(y2, 0.0, img.height);
      if (cx1 < cx2 && cy1 < cy2) {
        boxes.push_back(BBox(cx1, cy1, cx2, cy2));
        context_of.push_back(-1);
      }
    }
    const int n_ctx = cfg_.context_boxes_per_object +
                      (rng.bernoulli(cfg_.extra_context_box_prob) ? 1 : 0);
    for (int j = 0; j < n_ctx; ++j) {
      // Enclosing box, snug or wide. The snug window stays a usable box; the
      // wide ones fall under the 0.5 IoU matching bar.
      const double area_ratio =
          j == 0 ? rng.uniform(1.65, 2.0) : rng.uniform(2.6, 3.2);
      const double grow = std::sqrt(area_ratio);
      const double gw = bw * grow, gh = bh * grow;
      const double x1 = b.x1 - rng.uniform(0.0, gw - bw);
      const double y1 = b.y1 - rng.uniform(0.0, gh - bh);
      const double cx1 = std::clamp(x1, 0.0, img.width);
      const double cy1 = std::clamp(y1, 0.0, img.height);
      const double cx2 = std::clamp(x1 + gw, 0.0, img.width);
      const double cy2 = std::clamp(y1 + gh, 0.0, img.height);
      if (cx1 < cx2 && cy1 < cy2) {
        boxes.push_back(BBox(cx1, cy1, cx2, cy2));
        context_of.push_back(k);
      }
    }
  }
  for (int m = 0; m < cfg_.distractors_per_image; ++m) {
    boxes.push_back(random_box(rng, img.width, img.height));
    context_of.push_back(-1);
  }

  std::vector<Candidate> out;
  out.reserve(boxes.size());
  for (std::size_t bi = 0; bi < boxes.size(); ++bi) {
    const BBox& box = boxes[bi];
    const int m = rng.uniform_int(0, cfg_.n_background_prototypes - 1);
    Eigen::VectorXd bg = cfg_.background_strength * bg_prototypes_.col(m);
    for (int r = 0; r < bg.size(); ++r) bg[r] += cfg_.background_sigma * rng.gauss();

    Eigen::VectorXd feat;
    if (context_of[bi] >= 0) {
      // Context box: pools the whole object plus surrounding clutter. The
      // clutter share grows with how much background the window covers.
      const double obj_area = area(img.hidden_gt[context_of[bi]].bbox);
      const double share = std::max(0.0, area(box) / obj_area - 1.0);
      feat = obj_feats[context_of[bi]] +
             cfg_.context_strength * share * bg_prototypes_.col(m);
      for (int r = 0; r < feat.size(); ++r) {
        feat[r] += cfg_.background_sigma * rng.gauss();
      }
    } else {
      double best_iou = 0.0;
      int nearest = -1;
      for (int k = 0; k < n_obj; ++k) {
        const double v = iou(box, img.hidden_gt[k].bbox);
        if (v > best_iou) {
          best_iou = v;
          nearest = k;
        }
      }
      const double alpha = (nearest >= 0 && best_iou >= 0.3) ? best_iou : 0.0;
      feat = alpha > 0.0 ? (alpha * obj_feats[nearest] + (1.0 - alpha) * bg).eval() : bg;
    }
    out.push_back(Candidate{box, std::move(feat)});
  }
  return out;
}

CandidateSource World::candidate_source() const {
  auto index = std::make_shared<std::map<std::string, const ImageRecord*>>();
  for (const Dataset* ds : {&source_train_, &target_train_, &target_test_}) {
    for (const auto& img : ds->images) (*index)[img.id] = &img;
  }
  const World* self = this;
  return [self, index](const ImageView& view) {
    auto it = index->find(view.id);
    if (it == index->end()) {
      throw ValidationError("candidate source: unknown image id '" + view.id + "'");
    }
    return self->candidates(*it->second);
  };
}

World World::with_source_fraction(double fraction, std::uint64_t seed) const {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("source fraction must be in (0, 1]");
  }
  World w = *this;
  if (fraction >= 1.0) return w;
  const std::size_t n = source_train_.images.size();
  const std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n))));
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(derive_seed(seed, "source_fraction"));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(i), static_cast<int>(n - 1)));
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::size_t> chosen(perm.begin(), perm.begin() + static_cast<long>(keep));
  std::sort(chosen.begin(), chosen.end());
  w.source_train_.images.clear();
  for (std::size_t i : chosen) w.source_train_.images.push_back(source_train_.images[i]);
  return w;
}

WorldConfig world_config_from_file(const std::string& path) {
  KvReader kv(path);
  WorldConfig c;
  c.feature_dim = kv.get_int("feature_dim", c.feature_dim);
  c.n_source_cats = kv.get_int("n_source_cats", c.n_source_cats);
  c.n_target_cats = kv.get_int("n_target_cats", c.n_target_cats);
  c.prototype_affinity = kv.get_double("prototype_affinity", c.prototype_affinity);
  c.feature_noise_sigma = kv.get_double("feature_noise_sigma", c.feature_noise_sigma);
  c.n_background_prototypes =
      kv.get_int("n_background_prototypes", c.n_background_prototypes);
  c.background_strength = kv.get_double("background_strength", c.background_strength);
  c.background_sigma = kv.get_double("background_sigma", c.background_sigma);
  c.context_boxes_per_object =
      kv.get_int("context_boxes_per_object", c.context_boxes_per_object);
  c.extra_context_box_prob =
      kv.get_double("extra_context_box_prob", c.extra_context_box_prob);
  c.context_strength = kv.get_double("context_strength", c.context_strength);
  c.objects_per_image_min = kv.get_int("objects_per_image_min", c.objects_per_image_min);
  c.objects_per_image_max = kv.get_int("objects_per_image_max", c.objects_per_image_max);
  c.n_source_images = kv.get_int("n_source_images", c.n_source_images);
  c.n_target_train_images = kv.get_int("n_target_train_images", c.n_target_train_images);
  c.n_target_test_images = kv.get_int("n_target_test_images", c.n_target_test_images);
  c.leak_rate = kv.get_double("leak_rate", c.leak_rate);
  c.jitter_sigma = kv.get_double("jitter_sigma", c.jitter_sigma);
  c.jitters_per_object = kv.get_int("jitters_per_object", c.jitters_per_object);
  c.distractors_per_image = kv.get_int("distractors_per_image", c.distractors_per_image);
  c.image_size = kv.get_double("image_size", c.image_size);
  c.seed = kv.get_u64("seed", c.seed);
  kv.finish();
  c.validate();
  return c;
}

}  // namespace wsod
