#include <gtest/gtest.h>

#include "properties.hpp"

TEST(Properties, EmLogLikelihoodMonotone) {
  const auto v = props::em_monotone();
  EXPECT_TRUE(v.ok) << v.note;
}

TEST(Properties, RecurrenceConservation) {
  const auto v = props::recurrence_conservation();
  EXPECT_TRUE(v.ok) << v.note;
}

TEST(Properties, BinMassesFormADistribution) {
  const auto v = props::bin_masses_sum_to_one();
  EXPECT_TRUE(v.ok) << v.note;
}

TEST(Properties, TransferEntropySign) {
  const auto v = props::te_nonnegative_and_zero_on_products();
  EXPECT_TRUE(v.ok) << v.note;
}

TEST(Properties, DissimilarityShape) {
  const auto v = props::dissimilarity_shape();
  EXPECT_TRUE(v.ok) << v.note;
}

TEST(Properties, ReorderedSumsNondecreasing) {
  const auto v = props::reorder_sorted();
  EXPECT_TRUE(v.ok) << v.note;
}
