#include <doctest.h>

#include <numeric>
#include <random>

#include "pdmc/bitio.hpp"
#include "pdmc/codec.hpp"
#include "pdmc/error.hpp"
#include "support.hpp"

using namespace pdmc;

namespace {

// Reflected CRC-32 (polynomial 0xEDB88320), bit by bit.
std::uint32_t oracle_crc32(std::span<const std::uint8_t> data) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::uint8_t b : data) {
    crc ^= b;
    for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

void reseal(std::vector<std::uint8_t>& stream) {
  const std::uint32_t crc = oracle_crc32(std::span(stream).first(stream.size() - 4));
  for (int i = 0; i < 4; ++i) stream[stream.size() - 4 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(crc >> (8 * i));
}

Partition random_partition(std::mt19937_64& rng, int w, int h, int labels) {
  std::uniform_int_distribution<int> lab(0, labels - 1);
  std::vector<std::int32_t> v(static_cast<std::size_t>(w * h));
  // Blocky labels keep regions larger than single pixels.
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) v[static_cast<std::size_t>(r * w + c)] = (r / 2 + c / 3) % 2 == 0 ? lab(rng) : lab(rng) % 2;
  }
  return connected_components(w, h, v);
}

// Merges random colour regions into groups; the result is a union of colour regions.
Partition random_union(std::mt19937_64& rng, const Partition& lp, int groups) {
  std::uniform_int_distribution<int> g(0, groups - 1);
  std::vector<std::int32_t> group_of(static_cast<std::size_t>(lp.region_count()));
  for (auto& x : group_of) x = g(rng);
  std::vector<std::int32_t> v(lp.pixel_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = group_of[static_cast<std::size_t>(lp[i])];
  return connected_components(lp.width(), lp.height(), v);
}

}  // namespace

TEST_CASE("bit writer packs MSB first and pads with zeros") {
  BitWriter w;
  w.put(0b101, 3);
  w.put(0xFF, 8);
  CHECK(w.bit_count() == 11);
  const auto bytes = w.finish();
  CHECK(bytes == std::vector<std::uint8_t>{0b10111111, 0b11100000});
  BitReader r(bytes);
  CHECK(r.get(3) == 0b101);
  CHECK(r.get(8) == 0xFF);
  CHECK_NOTHROW(r.expect_zero_padding());
  CHECK_THROWS_AS(r.get(6), DecodeError);
}

TEST_CASE("padding must be short and zero") {
  const std::vector<std::uint8_t> one{0x01};
  BitReader r(one);
  r.get(4);
  CHECK_THROWS_AS(r.expect_zero_padding(), DecodeError);
  const std::vector<std::uint8_t> two{0x00, 0x00};
  BitReader s(two);
  CHECK_THROWS_AS(s.expect_zero_padding(), DecodeError);
}

TEST_CASE("byte writer uses little endian and LEB128") {
  ByteWriter w;
  w.u16(0x1234);
  w.u32(0xA1B2C3D4);
  w.varint(300);
  w.varint(0);
  CHECK(w.bytes() == std::vector<std::uint8_t>{0x34, 0x12, 0xD4, 0xC3, 0xB2, 0xA1, 0xAC, 0x02, 0x00});
  ByteReader r(w.bytes());
  CHECK(r.u16() == 0x1234);
  CHECK(r.u32() == 0xA1B2C3D4);
  CHECK(r.varint() == 300);
  CHECK(r.varint() == 0);
  CHECK_THROWS_AS(r.u8(), DecodeError);
  const std::vector<std::uint8_t> padded{0x80, 0x00};
  ByteReader p(padded);
  CHECK_THROWS_AS(p.varint(), DecodeError);
  const std::vector<std::uint8_t> open{0x80};
  ByteReader q(open);
  CHECK_THROWS_AS(q.varint(), DecodeError);
}

TEST_CASE("quantizer levels and endpoints") {
  const QuantConfig q;
  CHECK(q.coefficient_bits() == 28);
  CHECK(dist_from_code(0, 1.0, 8.0, 12) == doctest::Approx(8.0));
  CHECK(dist_from_code(4095, 1.0, 8.0, 12) == doctest::Approx(1.0));
  CHECK(code_from_dist(8.0, 1.0, 8.0, 12) == 0);
  CHECK(code_from_dist(1.0, 1.0, 8.0, 12) == 4095);
  CHECK(code_from_dist(100.0, 1.0, 8.0, 12) == 0);
  CHECK_THROWS_AS(code_from_dist(0.0, 1.0, 8.0, 12), InvalidArgument);
  // Inverse-depth spacing: the mid code sits at the harmonic midpoint.
  CHECK(1.0 / dist_from_code(2048, 1.0, 8.0, 12) == doctest::Approx(0.125 + 0.875 * 2048.0 / 4095.0));
  QuantConfig bad;
  bad.n_dist = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("plane quantization") {
  const Camera cam;
  const QuantConfig q;
  const PlaneCode fronto = quantize_plane(Plane3D::fronto_parallel(2.0), cam, 1.0, 8.0, q);
  CHECK(fronto.theta_code == 0);
  CHECK(fronto.mode == PlaneMode::kIntra);
  const Plane3D back = dequantize_plane(fronto, cam, 1.0, 8.0, q);
  CHECK(back.offset == doctest::Approx(2.0).epsilon(1e-3));
  CHECK_THROWS_AS(quantize_plane(Plane3D{Vec3::UnitZ(), -1.0}, cam, 1.0, 8.0, q), InvalidArgument);
  PlaneCode out_of_range = fronto;
  out_of_range.theta_code = 256;
  CHECK_THROWS_AS(dequantize_plane(out_of_range, cam, 1.0, 8.0, q), InvalidArgument);
  PlaneCode skip;
  skip.mode = PlaneMode::kSkip;
  CHECK_THROWS_AS(dequantize_plane(skip, cam, 1.0, 8.0, q), InvalidArgument);
}

TEST_CASE("quantization is done in the coding camera frame") {
  Camera cam;
  cam.translation = Vec3(0.5, 0.0, 0.0);
  const QuantConfig q;
  const Plane3D world{Vec3::UnitZ(), 3.0};
  const PlaneCode a = quantize_plane(world, cam, 1.0, 8.0, q);
  CHECK(a == quantize_plane(world, Camera{}, 1.0, 8.0, q));
  const Plane3D back = dequantize_plane(a, cam, 1.0, 8.0, q);
  CHECK(back.normal.z() == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("a straight chain of eight edges is seven forward symbols") {
  // Elements between rows 1 and 2, columns 0..7: one horizontal crack line.
  std::vector<BoundaryElement> els;
  for (int c = 0; c < 8; ++c) els.push_back({1 * 10 + c, 2 * 10 + c});
  const auto bytes = encode_chains(els, 10, 4);
  // 32 anchor bits, 2 direction bits, 7 forward bits, 3 terminator bits.
  CHECK(bytes.size() == 6);
  CHECK(bytes == std::vector<std::uint8_t>{0x00, 0x02, 0x00, 0x00, 0x00, 0x70});
  CHECK(decode_chains(bytes, 10, 4) == els);
}

TEST_CASE("no added elements gives an empty chain payload") {
  CHECK(encode_chains({}, 10, 10).empty());
  CHECK(decode_chains({}, 10, 10).empty());
  const auto views = generate_scene(testing::small_spec(32, 24, 1, 2));
  const Partition lp = leaf_color_partition(views[0].color, 20);
  CHECK(encode_depth_contours(lp, lp).empty());
}

TEST_CASE("chain coding round trips arbitrary added contours") {
  std::mt19937_64 rng(91);
  for (int t = 0; t < 40; ++t) {
    const Partition lp = random_partition(rng, 17, 13, 3);
    const Partition other = random_partition(rng, 17, 13, 4);
    const Partition p_cod = intersect(lp, other);
    const auto added = added_depth_elements(p_cod, lp);
    const auto bytes = encode_depth_contours(p_cod, lp);
    CHECK(decode_depth_contours(bytes, lp) == added);
    CHECK(decode_chains(encode_chains(added, 17, 13), 17, 13) == added);
  }
}

TEST_CASE("chain decoder rejects malformed payloads") {
  std::vector<BoundaryElement> els{{0, 10}, {1, 11}};
  auto bytes = encode_chains(els, 10, 4);
  auto cut = bytes;
  cut.pop_back();
  CHECK_THROWS_AS(decode_chains(cut, 10, 4), DecodeError);
  // Anchor outside the raster.
  std::vector<std::uint8_t> far{0xFF, 0xFF, 0x00, 0x00, 0x1C};
  CHECK_THROWS_AS(decode_chains(far, 10, 4), DecodeError);
  auto padded = bytes;
  padded.push_back(0x00);
  CHECK_THROWS_AS(decode_chains(padded, 10, 4), DecodeError);
}

TEST_CASE("active boundary flags") {
  const auto views = generate_scene(testing::small_spec(40, 30, 1, 3));
  const Partition lp = leaf_color_partition(views[0].color, 25);
  const auto pairs = color_pairs(lp);
  CHECK(std::is_sorted(pairs.begin(), pairs.end()));
  const auto all = active_flags(lp, lp);
  CHECK(std::all_of(all.begin(), all.end(), [](std::uint8_t f) { return f == 1; }));
  const Partition one = connected_components(40, 30, std::vector<std::int32_t>(1200, 0));
  const auto none = active_flags(one, lp);
  CHECK(std::all_of(none.begin(), none.end(), [](std::uint8_t f) { return f == 0; }));
  const auto bytes = encode_active_boundaries(lp, lp);
  CHECK(bytes.size() == (pairs.size() + 7) / 8);
  CHECK(decode_active_boundaries(bytes, lp) == all);
  auto longer = bytes;
  longer.push_back(0);
  CHECK_THROWS_AS(decode_active_boundaries(longer, lp), DecodeError);
}

TEST_CASE("decoder-side partition reproduces unions of colour regions") {
  std::mt19937_64 rng(17);
  const auto views = generate_scene(testing::small_spec(48, 36, 1, 6));
  const Partition lp = leaf_color_partition(views[0].color, 60);
  for (int t = 0; t < 30; ++t) {
    const Partition p_cod = random_union(rng, lp, 2 + t % 7);
    const auto flags = decode_active_boundaries(encode_active_boundaries(p_cod, lp), lp);
    CHECK(reconstruct_partition(lp, flags, {}) == p_cod);
  }
}

TEST_CASE("decoder-side partition is a fixed point of the normalisation") {
  std::mt19937_64 rng(18);
  const auto views = generate_scene(testing::small_spec(48, 36, 1, 7));
  const Partition lp = leaf_color_partition(views[0].color, 60);
  for (int t = 0; t < 30; ++t) {
    const Partition arbitrary = intersect(random_union(rng, lp, 4), random_partition(rng, 48, 36, 2));
    const Partition rec = reconstruct_partition(lp, active_flags(arbitrary, lp), added_depth_elements(arbitrary, lp));
    const Partition again = reconstruct_partition(lp, active_flags(rec, lp), added_depth_elements(rec, lp));
    CHECK(again == rec);
  }
}

TEST_CASE("mode decision trades distortion against the coefficient bits") {
  DepthMap d(8, 8, 1.0, 8.0, 3.0f);
  const kernels::ViewGeometry g(d, Camera{});
  std::vector<std::int32_t> px(64);
  std::iota(px.begin(), px.end(), 0);
  const QuantConfig q;
  const Plane3D exact = Plane3D::fronto_parallel(3.0);
  const Plane3D off = Plane3D::fronto_parallel(3.1);
  CHECK(choose_mode(px, g, exact, std::nullopt, 1.0, q).mode == PlaneMode::kIntra);
  CHECK(choose_mode(px, g, exact, exact, 0.0, q).mode == PlaneMode::kSkip);
  CHECK(choose_mode(px, g, exact, off, 0.0, q).mode == PlaneMode::kIntra);
  // 64 * 0.01 = 0.64 extra distortion against 28 bits.
  CHECK(choose_mode(px, g, exact, off, 0.05, q).mode == PlaneMode::kSkip);
  CHECK(choose_mode(px, g, exact, off, 0.01, q).mode == PlaneMode::kIntra);
}

TEST_CASE("texture coding order and round trip") {
  CHECK(coding_order(std::vector<std::int32_t>{3, -1, 1, 1}) == std::vector<int>{2, 3, 0, 1});
  std::mt19937_64 rng(5);
  const QuantConfig q;
  std::uniform_int_distribution<int> ref(-1, 20);
  std::uniform_int_distribution<std::uint32_t> code(0, 255);
  std::uniform_int_distribution<std::uint32_t> dist(0, 4095);
  for (int t = 0; t < 50; ++t) {
    TextureSection s;
    for (int r = 0; r < 1 + t; ++r) {
      s.ref_labels.push_back(ref(rng));
      PlaneCode c{code(rng), code(rng), dist(rng), PlaneMode::kIntra};
      if (s.ref_labels.back() >= 0 && t % 3 == 0) c = PlaneCode{0, 0, 0, PlaneMode::kSkip};
      s.codes.push_back(c);
    }
    const auto bytes = encode_texture(s, q);
    CHECK(decode_texture(bytes, q) == s);
    if (bytes.size() > 1) {
      CHECK_THROWS_AS(decode_texture(std::span(bytes).first(bytes.size() - 1), q), DecodeError);
    }
  }
}

TEST_CASE("stream framing") {
  StreamHeader h{2, 300, 1, QuantConfig{}, 64, 48};
  std::vector<ViewSections> views(2);
  views[0].chains = {1, 2, 3};
  views[1].texture = {9};
  const auto bytes = serialize_stream(h, views);
  CHECK(bytes.size() == kHeaderBytes + 6 * kSectionPrefixBytes + 4 + kTrailerBytes);
  CHECK(bytes[0] == 'P');
  const std::uint32_t crc = oracle_crc32(std::span(bytes).first(bytes.size() - 4));
  CHECK(bytes[bytes.size() - 4] == static_cast<std::uint8_t>(crc));
  const ParsedStream ps = parse_stream(bytes);
  CHECK(ps.header == h);
  CHECK(ps.views == views);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(parse_stream(bad_magic), DecodeError);
  reseal(bad_magic);
  CHECK_THROWS_AS(parse_stream(bad_magic), DecodeError);
  auto bad_ref = bytes;
  bad_ref[6] = 7;
  reseal(bad_ref);
  CHECK_THROWS_AS(parse_stream(bad_ref), DecodeError);
  auto long_section = bytes;
  long_section[kHeaderBytes] = 200;
  reseal(long_section);
  CHECK_THROWS_AS(parse_stream(long_section), DecodeError);
  auto trailing = bytes;
  trailing.insert(trailing.end() - 4, 0);
  reseal(trailing);
  CHECK_THROWS_AS(parse_stream(trailing), DecodeError);
  CHECK_THROWS_AS(parse_stream(std::span(bytes).first(10)), DecodeError);
  h.ref_view = 2;
  CHECK_THROWS_AS(serialize_stream(h, views), InvalidArgument);
}

TEST_CASE("view coding order puts the reference first") {
  CHECK(view_coding_order(3, 1) == std::vector<int>{1, 0, 2});
  CHECK(view_coding_order(1, 0) == std::vector<int>{0});
}
