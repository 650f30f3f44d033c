#include <gtest/gtest.h>

#include "stockmem/errors.hpp"
#include "stockmem/metrics.hpp"

using namespace stockmem;

namespace {

ConfusionMatrix cm(std::int64_t tp, std::int64_t tn, std::int64_t fp, std::int64_t fn) {
  ConfusionMatrix m;
  m.tp = tp;
  m.tn = tn;
  m.fp = fp;
  m.fn = fn;
  return m;
}

}  // namespace

TEST(Metrics, WorkedExample) {
  auto m = cm(30, 30, 20, 20);
  EXPECT_DOUBLE_EQ(accuracy(m), 0.6);
  EXPECT_NEAR(compute_mcc(m), 0.2, 1e-12);
}

TEST(Metrics, PerfectAndInverted) {
  EXPECT_DOUBLE_EQ(accuracy(cm(5, 5, 0, 0)), 1.0);
  EXPECT_DOUBLE_EQ(compute_mcc(cm(5, 5, 0, 0)), 1.0);
  EXPECT_DOUBLE_EQ(compute_mcc(cm(0, 0, 5, 5)), -1.0);
}

TEST(Metrics, DegenerateMatricesScoreZeroMcc) {
  EXPECT_DOUBLE_EQ(compute_mcc(cm(10, 0, 0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(compute_mcc(cm(0, 10, 0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(compute_mcc(cm(4, 0, 6, 0)), 0.0);
  EXPECT_DOUBLE_EQ(accuracy(cm(0, 0, 0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(compute_mcc(cm(0, 0, 0, 0)), 0.0);
}

TEST(Metrics, AddCountsAbstentionsAsWrong) {
  ConfusionMatrix m;
  m.add(Label::up, Label::up);
  m.add(Label::down, Label::down);
  m.add(Label::up, Label::down);
  m.add(Label::down, Label::up);
  m.add(std::nullopt, Label::up);
  m.add(std::nullopt, Label::down);
  EXPECT_EQ(m, cm(1, 1, 2, 2));
  EXPECT_THROW(m.add(Label::up, Label::flat), PreconditionError);
  EXPECT_THROW(m.add(Label::flat, Label::up), PreconditionError);
}

TEST(Metrics, JsonShape) {
  nlohmann::json j = cm(1, 2, 3, 4);
  EXPECT_EQ(j["tp"], 1);
  EXPECT_EQ(j["fn"], 4);
}
