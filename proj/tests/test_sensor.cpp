#include <gtest/gtest.h>

#include <random>

#include "svs/sensor.hpp"
#include "test_util.hpp"

namespace svs {
namespace {

int neighbor_count(const MotionBitmap& bm, int r, int c) {
  int n = 0;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) {
      if (!dr && !dc) continue;
      const int rr = r + dr, cc = c + dc;
      if (rr >= 0 && rr < bm.rows() && cc >= 0 && cc < bm.cols() && bm.at(rr, cc)) ++n;
    }
  return n;
}

bool subset(const MotionBitmap& a, const MotionBitmap& b) {
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c)
      if (a.at(r, c) && !b.at(r, c)) return false;
  return true;
}

TEST(Subsample, ConstantFrameStaysConstant) {
  const auto out = subsample_qqvga(GrayFrame(480, 640, 77));
  EXPECT_TRUE(out.is_qqvga());
  for (auto p : out.pixels()) ASSERT_EQ(p, 77);
}

TEST(Subsample, SingleSaturatedBlockMapsToOnePixel) {
  GrayFrame f(480, 640, 0);
  for (int r = 8; r < 12; ++r)
    for (int c = 20; c < 24; ++c) f.at(r, c) = 255;
  const auto out = subsample_qqvga(f);
  for (int r = 0; r < 120; ++r)
    for (int c = 0; c < 160; ++c) ASSERT_EQ(out.at(r, c), (r == 2 && c == 5) ? 255 : 0);
}

TEST(Subsample, RoundedMeanOfBlock) {
  GrayFrame f(480, 640, 0);
  const int vals[16] = {0, 3, 9, 250, 17, 1, 1, 1, 64, 65, 66, 67, 2, 2, 2, 3};
  int sum = 0;
  for (int i = 0; i < 16; ++i) {
    f.at(i / 4, i % 4) = static_cast<std::uint8_t>(vals[i]);
    sum += vals[i];
  }
  // sum = 553, mean 34.5625 rounds to 35.
  ASSERT_EQ(sum, 553);
  EXPECT_EQ(subsample_qqvga(f).at(0, 0), 35);
}

TEST(Subsample, RejectsWrongSize) {
  EXPECT_THROW(subsample_qqvga(GrayFrame(120, 160)), ValidationError);
}

TEST(MotionStep, FirstFrameSeedsBackground) {
  SensorState st;
  GrayFrame f(120, 160, 100);
  EXPECT_EQ(motion_step(st, f).popcount(), 0);
  ASSERT_EQ(st.background.size(), 120u * 160u);
  EXPECT_EQ(st.background[0], 100.0);
}

TEST(MotionStep, StaticSceneNeverFires) {
  for (double alpha : {0.01, 0.05, 0.5, 1.0}) {
    SensorConfig cfg;
    cfg.alpha = alpha;
    SensorState st(cfg);
    std::mt19937_64 rng(1);
    GrayFrame f(120, 160);
    std::uniform_int_distribution<int> px(0, 255);
    for (auto& p : f.pixels()) p = static_cast<std::uint8_t>(px(rng));
    for (int i = 0; i < 20; ++i) ASSERT_EQ(motion_step(st, f).popcount(), 0);
  }
}

TEST(MotionStep, JumpOfTwiceThetaAssertsAndBackgroundUpdatesAfter) {
  SensorConfig cfg;
  cfg.theta = 15;
  cfg.alpha = 0.25;
  SensorState st(cfg);
  GrayFrame f(120, 160, 100);
  motion_step(st, f);
  f.at(4, 9) = 130;  // |130 - 100| = 30 > 15
  const auto bm = motion_step(st, f);
  EXPECT_EQ(bm.popcount(), 1);
  EXPECT_TRUE(bm.at(4, 9));
  EXPECT_DOUBLE_EQ(st.background[4 * 160 + 9], 0.75 * 100 + 0.25 * 130);
}

TEST(MotionStep, DifferenceEqualToThetaDoesNotFire) {
  SensorState st;
  GrayFrame f(120, 160, 100);
  motion_step(st, f);
  f.at(0, 0) = 115;
  EXPECT_EQ(motion_step(st, f).popcount(), 0);
}

TEST(Erode, ZeroThresholdIsIdentity) {
  std::mt19937_64 rng(2);
  const auto bm = testing_util::random_bitmap(rng, 0.3);
  EXPECT_EQ(erode(bm, 0), bm);
}

TEST(Erode, IsolatedPixelRemovedAtK1) {
  MotionBitmap bm;
  bm.set(60, 80, true);
  EXPECT_EQ(erode(bm, 1).popcount(), 0);
}

TEST(Erode, SolidThreeByThreeBlockPerCell) {
  MotionBitmap bm;
  testing_util::fill_rect(bm, {10, 10, 12, 12});
  // Corners have 3 neighbors, edge midpoints 5, center 8.
  for (int k = 0; k <= 8; ++k) {
    const auto out = erode(bm, k);
    for (int r = 10; r <= 12; ++r)
      for (int c = 10; c <= 12; ++c)
        ASSERT_EQ(out.at(r, c), neighbor_count(bm, r, c) >= k) << "k=" << k;
  }
  EXPECT_EQ(erode(bm, 3).popcount(), 9);
  EXPECT_EQ(erode(bm, 4).popcount(), 5);
  EXPECT_EQ(erode(bm, 6).popcount(), 1);
  EXPECT_EQ(erode(bm, 9 - 1).popcount(), 1);
}

TEST(Erode, BordersArePaddedWithZeros) {
  MotionBitmap bm;
  testing_util::fill_rect(bm, {0, 0, 1, 1});
  // Each of the four pixels sees exactly 3 hot neighbors.
  EXPECT_EQ(erode(bm, 3).popcount(), 4);
  EXPECT_EQ(erode(bm, 4).popcount(), 0);
}

TEST(Erode, AntiExtensiveAndMonotoneInK) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 40; ++i) {
    const auto bm = testing_util::random_bitmap(rng, 0.05 + 0.02 * i);
    MotionBitmap prev = bm;
    for (int k = 0; k <= 8; ++k) {
      const auto out = erode(bm, k);
      ASSERT_TRUE(subset(out, bm));
      ASSERT_TRUE(subset(out, prev));
      prev = out;
    }
  }
}

TEST(Erode, RejectsOutOfRangeK) {
  EXPECT_THROW(erode(MotionBitmap{}, 9), ValidationError);
  EXPECT_THROW(erode(MotionBitmap{}, -1), ValidationError);
}

ProjectionPair runs(std::vector<int> x, std::vector<int> y) { return {std::move(x), std::move(y)}; }

TEST(CheckAlarm, Cases) {
  SensorConfig cfg;
  cfg.min_run_x = 3;
  cfg.min_run_y = 2;
  EXPECT_FALSE(check_alarm(runs(std::vector<int>(160, 0), std::vector<int>(120, 0)), cfg));
  EXPECT_TRUE(check_alarm(runs({0, 1, 2, 1, 5, 0, 1}, {0, 3, 3, 0}), cfg));   // runs 4 and 2
  EXPECT_FALSE(check_alarm(runs({0, 1, 1, 0, 1, 1, 0}, {9, 9, 9, 9}), cfg));  // x run 2 < 3
  EXPECT_FALSE(check_alarm(runs({1, 1, 1}, {1, 0, 1}), cfg));                 // y run 1 < 2
}

GrayFrame block_frame(int left, int top, int size = 8) {
  GrayFrame f(120, 160, 60);
  for (int r = top; r < top + size; ++r)
    for (int c = left; c < left + size; ++c)
      if (r >= 0 && r < 120 && c >= 0 && c < 160) f.at(r, c) = 200;
  return f;
}

TEST(SensorTick, StaticSequenceNeverRaises) {
  SensorState st;
  for (int i = 0; i < 30; ++i)
    ASSERT_TRUE(std::holds_alternative<NoEvent>(sensor_tick(st, GrayFrame(120, 160, 90))));
}

TEST(SensorTick, MovingBlockRaisesOnceThenDeliversBurst) {
  SensorConfig cfg;
  cfg.min_run_x = cfg.min_run_y = 4;
  SensorState st(cfg);
  // Frame 0: empty scene seeds the background. Frame 1: block appears.
  EXPECT_TRUE(std::holds_alternative<NoEvent>(sensor_tick(st, GrayFrame(120, 160, 60))));
  EXPECT_TRUE(std::holds_alternative<AlarmRaised>(sensor_tick(st, block_frame(20, 40))));
  EXPECT_EQ(st.mode, SensorMode::Imaging);
  for (int i = 0; i < cfg.burst_len; ++i) {
    const auto ev = sensor_tick(st, block_frame(22 + 2 * i, 40));
    const auto* d = std::get_if<FrameDelivered>(&ev);
    ASSERT_NE(d, nullptr) << "frame " << i;
    EXPECT_GT(d->bitmap.popcount(), 0);
    EXPECT_TRUE(d->frame.is_qqvga());
  }
  EXPECT_EQ(st.mode, SensorMode::MotionDetection);
  // Motion continues, so the next tick raises a new alarm.
  EXPECT_TRUE(std::holds_alternative<AlarmRaised>(sensor_tick(st, block_frame(60, 40))));
}

TEST(SensorTick, AlarmDuringBurstIsIgnored) {
  SensorConfig cfg;
  cfg.burst_len = 3;
  SensorState st(cfg);
  sensor_tick(st, GrayFrame(120, 160, 60));
  ASSERT_TRUE(std::holds_alternative<AlarmRaised>(sensor_tick(st, block_frame(20, 20))));
  // A second, larger object appears mid-burst: still a delivered frame.
  auto f = block_frame(40, 20);
  for (int r = 80; r < 100; ++r)
    for (int c = 100; c < 130; ++c) f.at(r, c) = 250;
  EXPECT_TRUE(std::holds_alternative<FrameDelivered>(sensor_tick(st, f)));
  EXPECT_EQ(st.burst_remaining, 2);
}

TEST(SensorTick, VgaBurstCarriesBitmapInLsb) {
  SensorState st;
  auto vga = [](const GrayFrame& qq) {
    GrayFrame out(480, 640);
    for (int r = 0; r < 480; ++r)
      for (int c = 0; c < 640; ++c) out.at(r, c) = qq.at(r / 4, c / 4);
    return out;
  };
  sensor_tick(st, vga(GrayFrame(120, 160, 61)));
  ASSERT_TRUE(std::holds_alternative<AlarmRaised>(sensor_tick(st, vga(block_frame(10, 10)))));
  const auto ev = sensor_tick(st, vga(block_frame(12, 10)));
  const auto& d = std::get<FrameDelivered>(ev);
  EXPECT_TRUE(d.frame.is_vga());
  EXPECT_EQ(decode_lsb(d.frame).bitmap, d.bitmap);
}

TEST(SensorTick, EveryAlarmIsFollowedByExactlyOneBurst) {
  std::mt19937_64 rng(4);
  SensorConfig cfg;
  cfg.burst_len = 4;
  SensorState st(cfg);
  std::uniform_int_distribution<int> pos(0, 150), on(0, 2);
  std::vector<int> kinds;  // 0 none, 1 alarm, 2 delivered
  for (int i = 0; i < 400; ++i) {
    const auto f = on(rng) ? block_frame(pos(rng), pos(rng) % 110) : GrayFrame(120, 160, 60);
    kinds.push_back(static_cast<int>(sensor_tick(st, f).index()));
  }
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (kinds[i] != 1) continue;
    for (int k = 1; k <= cfg.burst_len && i + k < kinds.size(); ++k) ASSERT_EQ(kinds[i + k], 2);
    if (i + cfg.burst_len + 1 < kinds.size()) {
      ASSERT_NE(kinds[i + cfg.burst_len + 1], 2);
    }
  }
  // Deliveries only ever follow an alarm.
  ASSERT_NE(kinds.front(), 2);
  std::size_t alarms = std::count(kinds.begin(), kinds.end(), 1);
  EXPECT_GT(alarms, 0u);
}

TEST(Lsb, EmptyBitmapClearsAllLsbsOnly) {
  GrayFrame f(480, 640);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> px(0, 255);
  for (auto& p : f.pixels()) p = static_cast<std::uint8_t>(px(rng));
  const auto enc = encode_lsb(f, MotionBitmap{});
  for (std::size_t i = 0; i < f.pixels().size(); ++i) {
    ASSERT_EQ(enc.pixels()[i] & 1, 0);
    ASSERT_EQ(enc.pixels()[i] >> 1, f.pixels()[i] >> 1);
  }
}

TEST(Lsb, SingleBitAtOrigin) {
  MotionBitmap bm;
  bm.set(0, 0, true);
  const auto enc = encode_lsb(GrayFrame(480, 640, 0x80), bm);
  EXPECT_EQ(enc.at(0, 0), 0x81);
  EXPECT_EQ(enc.at(0, 1), 0x80);
}

TEST(Lsb, RoundTripIsExactAndUpperBitsUntouched) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> px(0, 255);
  for (int i = 0; i < 10; ++i) {
    GrayFrame f(480, 640);
    for (auto& p : f.pixels()) p = static_cast<std::uint8_t>(px(rng));
    const auto bm = testing_util::random_bitmap(rng, 0.1 * i);
    const auto enc = encode_lsb(f, bm);
    const auto dec = decode_lsb(enc);
    ASSERT_EQ(dec.bitmap, bm);
    for (std::size_t k = 0; k < f.pixels().size(); ++k) {
      ASSERT_EQ(enc.pixels()[k] & 0xFE, f.pixels()[k] & 0xFE);
      ASSERT_EQ(dec.image.pixels()[k], f.pixels()[k] & 0xFE);
    }
  }
}

TEST(Lsb, DecodeIgnoresOffLatticeBitsAndZeroFrame) {
  EXPECT_EQ(decode_lsb(GrayFrame(480, 640, 0)).bitmap.popcount(), 0);
  GrayFrame f(480, 640, 0);
  f.at(1, 2) = 1;
  f.at(5, 4) = 3;
  EXPECT_EQ(decode_lsb(f).bitmap.popcount(), 0);
}

TEST(Lsb, DimensionChecks) {
  EXPECT_THROW(encode_lsb(GrayFrame(120, 160), MotionBitmap{}), ValidationError);
  EXPECT_THROW(encode_lsb(GrayFrame(480, 640), MotionBitmap::with_dims(4, 4)), ValidationError);
  EXPECT_THROW(decode_lsb(GrayFrame(120, 160)), ValidationError);
}

TEST(SensorConfig, Validation) {
  SensorConfig c;
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.erosion_k = 9;
  EXPECT_THROW(SensorState{c}, ValidationError);
  c = {};
  c.burst_len = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}

}  // namespace
}  // namespace svs
