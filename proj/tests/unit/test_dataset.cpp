#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "test_support.hpp"
#include "veritas/audio.hpp"
#include "veritas/dataset.hpp"
#include "veritas/error.hpp"

namespace veritas {
namespace {

using testing::TempDir;
using testing::write_text;

std::string record_line(const std::string& vid, const std::string& pid, int label) {
  return R"({"video_id":")" + vid + R"(","identity_id":")" + pid + R"(","label":)" + std::to_string(label) +
         R"(,"motion_path":"m.txt","audio_path":"a.wav","transcript_path":"t.txt"})";
}

std::string thrown_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

TEST(Manifest, MinimalTwoRecordFile) {
  TempDir dir;
  write_text(dir / "m.jsonl", record_line("v0", "p0", 0) + "\n" + record_line("v1", "p1", 1) + "\n");
  const auto m = load_manifest(dir / "m.jsonl");
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.class_counts().at(0), 1u);
  EXPECT_EQ(m.class_counts().at(1), 1u);
}

TEST(Manifest, DuplicateVideoIdNamesIdAndLine) {
  TempDir dir;
  write_text(dir / "m.jsonl", record_line("v1", "p0", 0) + "\n" + record_line("v2", "p1", 1) + "\n" +
                                  record_line("v1", "p2", 1) + "\n");
  const auto msg = thrown_message([&] { load_manifest(dir / "m.jsonl"); });
  EXPECT_NE(msg.find("\"v1\""), std::string::npos) << msg;
  EXPECT_NE(msg.find(":3:"), std::string::npos) << msg;
  EXPECT_THROW(load_manifest(dir / "m.jsonl"), DataError);
}

TEST(Manifest, MissingFieldAndBadLabelReportLine) {
  TempDir dir;
  write_text(dir / "a.jsonl", record_line("v0", "p0", 0) + "\n" + R"({"video_id":"v1","label":1})" + "\n");
  auto msg = thrown_message([&] { load_manifest(dir / "a.jsonl"); });
  EXPECT_NE(msg.find(":2:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("identity_id"), std::string::npos) << msg;

  write_text(dir / "b.jsonl", record_line("v0", "p0", 0) + "\n" + record_line("v1", "p1", 2) + "\n");
  msg = thrown_message([&] { load_manifest(dir / "b.jsonl"); });
  EXPECT_NE(msg.find(":2:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("label"), std::string::npos) << msg;
}

TEST(Manifest, MissingFileAndSingleClassRejected) {
  TempDir dir;
  EXPECT_THROW(load_manifest(dir / "absent.jsonl"), DataError);
  write_text(dir / "one.jsonl", record_line("v0", "p0", 1) + "\n" + record_line("v1", "p1", 1) + "\n");
  EXPECT_THROW(load_manifest(dir / "one.jsonl"), DataError);
}

TEST(Manifest, HundredFourVideosOverFiftyEightIdentities) {
  TempDir dir;
  std::string text;
  for (int i = 0; i < 104; ++i) {
    const int identity = i < 58 ? i : (i - 58) % 58;
    text += record_line("v" + std::to_string(i), "p" + std::to_string(identity), i < 54 ? 1 : 0) + "\n";
  }
  write_text(dir / "m.jsonl", text);
  const auto m = load_manifest(dir / "m.jsonl");
  EXPECT_EQ(m.size(), 104u);
  EXPECT_EQ(m.identities().size(), 58u);
  EXPECT_EQ(m.class_counts().at(1), 54u);
  EXPECT_EQ(m.class_counts().at(0), 50u);
  std::size_t total = 0;
  for (const auto& [id, idx] : m.identities()) {
    EXPECT_GE(idx.size(), 1u);
    total += idx.size();
  }
  EXPECT_EQ(total, 104u);
}

TEST(Manifest, RoundTripPreservesOptionalFields) {
  TempDir dir;
  VideoRecord a{"v0", "p0", 0, "m0.txt", "a0.wav", "t0.txt", std::nullopt, std::nullopt, std::nullopt};
  VideoRecord b{"v1", "p0", 1, "m1.txt", "a1.wav", "t1.txt",
                std::vector<ExpressionBits>{ExpressionBits("10010"), ExpressionBits("00000")}, ExpressionBits("01100"),
                std::int64_t{120}};
  const DatasetManifest m({a, b}, dir.path());
  write_manifest(dir / "m.jsonl", m);
  const auto back = load_manifest(dir / "m.jsonl");
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.resolve("m0.txt"), dir.path() / "m0.txt");
}

TEST(Trajectories, ShapePassthrough) {
  TempDir dir;
  std::string text;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 100; ++c) text += std::to_string(r * 1000 + c) + (c + 1 < 100 ? " " : "\n");
  }
  write_text(dir / "d.txt", text);
  const auto bag = load_trajectory_descriptors(dir / "d.txt", {0, 95});
  EXPECT_EQ(bag.size(), 3u);
  EXPECT_EQ(bag.dim(), 96u);
  EXPECT_EQ(bag.row(2)[5], 2005.0);
  EXPECT_FALSE(bag.has_timestamps());
}

TEST(Trajectories, NonNumericTokenReportsLineAndColumn) {
  TempDir dir;
  write_text(dir / "d.txt", "1 2 3\n4 x 6\n");
  const auto msg = thrown_message([&] { load_trajectory_descriptors(dir / "d.txt", {0, 2}); });
  EXPECT_NE(msg.find(":2:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column 1"), std::string::npos) << msg;
}

TEST(Trajectories, RaggedEmptyAndNonFiniteRejected) {
  TempDir dir;
  write_text(dir / "ragged.txt", "1 2 3\n4 5\n");
  EXPECT_THROW(load_trajectory_descriptors(dir / "ragged.txt", {0, 1}), DataError);
  write_text(dir / "empty.txt", "");
  EXPECT_THROW(load_trajectory_descriptors(dir / "empty.txt", {0, 0}), DataError);
  write_text(dir / "nan.txt", "1 nan 3\n");
  EXPECT_THROW(load_trajectory_descriptors(dir / "nan.txt", {0, 2}), DataError);
  write_text(dir / "inf.txt", "1 inf 3\n");
  EXPECT_THROW(load_trajectory_descriptors(dir / "inf.txt", {0, 2}), DataError);
}

// Builds a line in the dense-trajectory tool's layout from its documented
// block sizes, independently of the library constants.
std::string reference_tool_line(int frame) {
  const int blocks[] = {10, 30, 96, 108, 96, 96};  // info, shape, HOG, HOF, MBHx, MBHy
  std::ostringstream line;
  int col = 0;
  for (int width : blocks) {
    for (int i = 0; i < width; ++i, ++col) line << (col == 0 ? frame : col) << (col + 1 < 436 ? " " : "");
  }
  return line.str() + "\n";
}

TEST(Trajectories, ReferenceLayoutMbhBlockIs192Wide) {
  static_assert(idt::kColumnCount == 436);
  EXPECT_EQ(idt::kMbh.width(), 192u);
  EXPECT_EQ(idt::kMbh.first, 10u + 30u + 96u + 108u);
  EXPECT_EQ(idt::kMbhX.width() + idt::kMbhY.width(), idt::kMbh.width());
  EXPECT_EQ(idt::kHog.width(), 96u);
  EXPECT_EQ(idt::kHof.width(), 108u);
  EXPECT_EQ(idt::kTrajectory.width(), 30u);

  TempDir dir;
  write_text(dir / "idt.txt", reference_tool_line(7) + reference_tool_line(9));
  const auto bag = load_trajectory_descriptors(dir / "idt.txt", idt::kMbh, idt::kFrameColumn);
  EXPECT_EQ(bag.dim(), 192u);
  EXPECT_EQ(bag.size(), 2u);
  EXPECT_EQ(bag.row(0)[0], 244.0);
  EXPECT_EQ(bag.row(0)[191], 435.0);
  EXPECT_EQ(bag.timestamps(), (std::vector<std::int64_t>{7, 9}));
}

TEST(Trajectories, RowCountEqualsLineCount) {
  TempDir dir;
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto lines = 1 + rng.index(40);
    std::string text;
    for (std::size_t l = 0; l < lines; ++l) text += "1 2 3 4\n";
    write_text(dir / "d.txt", text);
    EXPECT_EQ(load_trajectory_descriptors(dir / "d.txt", {1, 3}).size(), lines);
  }
}

// Minimal WAV writer used as an oracle for the reader.
std::string wav_bytes(int channels, int rate, const std::vector<std::int16_t>& interleaved) {
  auto u32 = [](std::uint32_t v) { return std::string{char(v & 255), char((v >> 8) & 255), char((v >> 16) & 255), char(v >> 24)}; };
  auto u16 = [](std::uint16_t v) { return std::string{char(v & 255), char(v >> 8)}; };
  const std::uint32_t data_size = static_cast<std::uint32_t>(interleaved.size() * 2);
  std::string s = "RIFF" + u32(36 + data_size) + "WAVEfmt " + u32(16) + u16(1) + u16(static_cast<std::uint16_t>(channels)) +
                  u32(static_cast<std::uint32_t>(rate)) + u32(static_cast<std::uint32_t>(rate * channels * 2)) +
                  u16(static_cast<std::uint16_t>(channels * 2)) + u16(16) + "data" + u32(data_size);
  for (auto v : interleaved) s += u16(static_cast<std::uint16_t>(v));
  return s;
}

TEST(Audio, MonoPassthrough) {
  std::vector<std::int16_t> samples(16000);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = static_cast<std::int16_t>(i % 2000 - 1000);
  const auto sig = parse_wav(wav_bytes(1, 16000, samples));
  EXPECT_EQ(sig.sample_rate, 16000);
  ASSERT_EQ(sig.samples.size(), 16000u);
  EXPECT_DOUBLE_EQ(sig.samples[3], (3 - 1000) / 32768.0);
}

TEST(Audio, OppositeStereoChannelsAverageToSilence) {
  std::vector<std::int16_t> samples;
  for (int i = 0; i < 100; ++i) {
    samples.push_back(16384);
    samples.push_back(-16384);
  }
  const auto sig = parse_wav(wav_bytes(2, 8000, samples));
  ASSERT_EQ(sig.samples.size(), 100u);
  for (double v : sig.samples) EXPECT_EQ(v, 0.0);
}

TEST(Audio, MostNegativeSampleIsMinusOne) {
  const auto sig = parse_wav(wav_bytes(1, 8000, {-32768, 32767, 0}));
  EXPECT_EQ(sig.samples[0], -1.0);
  EXPECT_DOUBLE_EQ(sig.samples[1], 32767.0 / 32768.0);
}

TEST(Audio, TruncatedAndCompressedRejected) {
  const auto good = wav_bytes(1, 8000, {1, 2, 3});
  EXPECT_THROW(parse_wav(good.substr(0, 10)), DataError);
  auto compressed = good;
  compressed[20] = 2;  // ADPCM format tag
  EXPECT_THROW(parse_wav(compressed), DataError);
}

TEST(Audio, FileRoundTripThroughWriter) {
  TempDir dir;
  PcmSignal s{16000, {0.0, 0.5, -0.5, -1.0}};
  write_wav16(dir / "x.wav", s);
  const auto back = load_audio(dir / "x.wav");
  EXPECT_EQ(back.sample_rate, 16000);
  EXPECT_EQ(back.samples, s.samples);
}

TEST(DescriptorBag, InvariantsEnforced) {
  EXPECT_THROW(DescriptorBag(2, {}), Error);
  EXPECT_THROW(DescriptorBag(2, {1.0, 2.0, 3.0}), Error);
  EXPECT_THROW(DescriptorBag(1, {std::nan("")}), Error);
  EXPECT_THROW(DescriptorBag(1, {1.0, 2.0}, {0}), Error);
}

TEST(DescriptorBag, BinaryRoundTrip) {
  const DescriptorBag bag(2, {1.0, -2.5, 3.25, 4.0}, {3, 8});
  std::stringstream ss;
  write_bag_binary(ss, bag);
  EXPECT_EQ(read_bag_binary(ss), bag);
}

}  // namespace
}  // namespace veritas
