#include <doctest.h>

#include "pdmc/eval.hpp"
#include "pdmc/error.hpp"
#include "pdmc/pipeline.hpp"
#include "support.hpp"

using namespace pdmc;

namespace {

EncoderConfig small_config() {
  EncoderConfig cfg;
  cfg.n_regs_color = 50;
  cfg.n_regs_depth = 50;
  return cfg;
}

struct DecoderInputs {
  std::vector<ColorImage> colors;
  std::vector<ViewCalibration> cals;
};

DecoderInputs inputs(std::span<const ViewBundle> views) {
  DecoderInputs in;
  for (const auto& v : views) {
    in.colors.push_back(v.color);
    in.cals.push_back({v.camera, v.depth.min_z, v.depth.max_z});
  }
  return in;
}

void check_matches(const DecodeResult& dec, const EncodeResult& enc) {
  REQUIRE(dec.views.size() == enc.views.size());
  CHECK(dec.header == enc.header);
  for (std::size_t v = 0; v < dec.views.size(); ++v) {
    CHECK(dec.views[v].partition == enc.views[v].partition);
    CHECK(dec.views[v].texture == enc.views[v].texture);
    CHECK(dec.views[v].planes == enc.views[v].planes);
    CHECK(dec.views[v].depth == enc.views[v].depth);
  }
}

}  // namespace

TEST_CASE("encoder configuration is validated") {
  EncoderConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.n_regs_color = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("leaf partitions") {
  const auto views = generate_scene(testing::small_spec(48, 36, 1, 4));
  const EncoderConfig cfg = small_config();
  const ViewLeaves lv = view_leaves(views[0], cfg, 0);
  CHECK(lv.p_cd == intersect(lv.lp_color, lv.lp_depth));
  CHECK(refines(lv.p_cd, lv.lp_color));
  CHECK(refines(lv.p_cd, lv.lp_depth));
}

TEST_CASE("single-view stream decodes to the encoder reconstruction") {
  const auto views = generate_scene(testing::small_spec(64, 48, 1, 5));
  const EncoderConfig cfg = small_config();
  const auto in = inputs(views);
  for (double lambda : {0.01, 1.0, 100.0}) {
    const EncodeResult enc = encode_single_view(views[0], cfg, {lambda, std::nullopt});
    CHECK(enc.stream.size() == rate_breakdown(enc.stream).total);
    check_matches(decode(enc.stream, in.colors, in.cals), enc);
    for (const auto& code : enc.views[0].texture.codes) CHECK(code.mode == PlaneMode::kIntra);
  }
}

TEST_CASE("encoding is deterministic") {
  const auto views = generate_scene(testing::small_spec(64, 48, 3, 6));
  const EncoderConfig cfg = small_config();
  const EncodeResult a = encode_multiview(views, cfg, {0.5, std::nullopt});
  const EncodeResult b = encode_multiview(views, cfg, {0.5, std::nullopt});
  CHECK(a.stream == b.stream);
}

TEST_CASE("multiview stream decodes and predicts only from the reference") {
  const auto views = generate_scene(testing::small_spec(64, 48, 3, 8));
  const EncoderConfig cfg = small_config();
  const EncodeResult enc = encode_multiview(views, cfg, {1.0, std::nullopt});
  CHECK(enc.ref_view == 1);
  CHECK(enc.header.ref_view == 1);
  check_matches(decode(enc.stream, inputs(views).colors, inputs(views).cals), enc);
  for (std::size_t v = 0; v < enc.views.size(); ++v) {
    const auto& t = enc.views[v].texture;
    REQUIRE(t.codes.size() == static_cast<std::size_t>(enc.views[v].partition.region_count()));
    for (std::size_t r = 0; r < t.codes.size(); ++r) {
      if (t.ref_labels[r] < 0) CHECK(t.codes[r].mode == PlaneMode::kIntra);
      if (static_cast<int>(v) == enc.ref_view) CHECK(t.codes[r].mode == PlaneMode::kIntra);
    }
  }
}

TEST_CASE("an explicit reference view is honoured") {
  const auto views = generate_scene(testing::small_spec(48, 36, 3, 9));
  EncoderConfig cfg = small_config();
  cfg.ref_view = 0;
  const EncodeResult enc = encode_multiview(views, cfg, {1.0, std::nullopt});
  CHECK(enc.header.ref_view == 0);
  check_matches(decode(enc.stream, inputs(views).colors, inputs(views).cals), enc);
  cfg.ref_view = 3;
  CHECK_THROWS_AS(encode_multiview(views, cfg, {1.0, std::nullopt}), InvalidArgument);
}

TEST_CASE("one view through the joint path equals the single-view path") {
  const auto views = generate_scene(testing::small_spec(64, 48, 1, 10));
  const EncoderConfig cfg = small_config();
  for (double lambda : {0.1, 3.0}) {
    CHECK(encode_multiview(views, cfg, {lambda, std::nullopt}).stream ==
          encode_single_view(views[0], cfg, {lambda, std::nullopt}).stream);
  }
}

TEST_CASE("bit budget bounds the modelled rate") {
  const auto views = generate_scene(testing::small_spec(64, 48, 1, 11));
  const EncoderConfig cfg = small_config();
  const PreparedView prep = prepare_view(views[0], cfg, 0);
  const EncodeResult loose = encode_leaf_mode(views[0], prep, cfg, {0.0, std::nullopt});
  for (double fraction : {0.2, 0.5, 0.9}) {
    const double budget = fraction * loose.model_rate;
    const EncodeResult enc = encode_leaf_mode(views[0], prep, cfg, {0.0, budget});
    CHECK(enc.model_rate <= budget);
  }
}

TEST_CASE("larger lambda never raises the modelled rate") {
  const auto views = generate_scene(testing::small_spec(64, 48, 1, 12));
  const EncoderConfig cfg = small_config();
  const PreparedView prep = prepare_view(views[0], cfg, 0);
  double previous = 1e300;
  for (double lambda : {0.001, 0.01, 0.1, 1.0, 10.0, 100.0}) {
    const EncodeResult enc = encode_leaf_mode(views[0], prep, cfg, {lambda, std::nullopt});
    CHECK(enc.model_rate <= previous);
    previous = enc.model_rate;
  }
}

TEST_CASE("merging sequence stops at the requested region count") {
  const auto views = generate_scene(testing::small_spec(64, 48, 1, 13));
  const EncoderConfig cfg = small_config();
  const PreparedView prep = prepare_view(views[0], cfg, 0, LeafMode::kDepthOnly);
  const int leaves = prep.leaves.lp_depth.region_count();
  for (int k : {1, 3, 7}) {
    if (k > leaves) continue;
    const EncodeResult enc = encode_merging_sequence(views[0], prep, k, cfg);
    CHECK(enc.views[0].partition.region_count() >= k);
  }
  CHECK(encode_merging_sequence(views[0], prep, 0, cfg).views[0].partition.region_count() == 1);
}

TEST_CASE("decoder rejects damaged streams and mismatched inputs") {
  const auto views = generate_scene(testing::small_spec(48, 36, 2, 14));
  const EncoderConfig cfg = small_config();
  const EncodeResult enc = encode_multiview(views, cfg, {1.0, std::nullopt});
  auto in = inputs(views);
  for (std::size_t cut : {std::size_t{0}, std::size_t{7}, enc.stream.size() / 2, enc.stream.size() - 1}) {
    CHECK_THROWS_AS(decode(std::span(enc.stream).first(cut), in.colors, in.cals), DecodeError);
  }
  auto flipped = enc.stream;
  flipped[flipped.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(decode(flipped, in.colors, in.cals), DecodeError);

  auto flat = in;
  for (auto& px : flat.colors[0].values) px = Rgb{100, 100, 100};
  CHECK_THROWS_AS(decode(enc.stream, flat.colors, flat.cals), DecodeError);

  in.colors.pop_back();
  in.cals.pop_back();
  CHECK_THROWS(decode(enc.stream, in.colors, in.cals));
}
