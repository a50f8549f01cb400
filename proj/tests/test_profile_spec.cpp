#include "lsgrf/error.hpp"
#include "lsgrf/field_spec.hpp"
#include "lsgrf/profile.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lsgrf;
using nlohmann::json;

TEST(AlphaProfile, ConstantEverywhere) {
    const auto p = AlphaProfile::constant(1.3);
    for (double t : {0.0, 0.4, 1.0, 7.0}) EXPECT_EQ(p(t), 1.3);
}

TEST(AlphaProfile, UniqueMinStrictlyAboveAwayFromMinimizer) {
    const auto p = AlphaProfile::unique_min(0.9, 0.4, 2.0, 1.5);
    EXPECT_EQ(p(0.4), 0.9);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double t = U(gen);
        if (t != 0.4) EXPECT_GT(p(t), 0.9);
    }
}

TEST(AlphaProfile, UniqueMinExpansionHoldsExactly) {
    const auto p = AlphaProfile::unique_min(1.0, 0.5, 1.7, 2.0);
    for (double h : {1e-1, 1e-3, 1e-6, -1e-2}) {
        EXPECT_NEAR(p(0.5 + h) - 1.0 - 1.7 * h * h, 0.0, 1e-15);
    }
}

TEST(AlphaProfile, ClampedBelowTwo) {
    const auto p = AlphaProfile::unique_min(1.5, 0.0, 10.0, 1.0);
    EXPECT_EQ(p(1.0), AlphaProfile::kMaxExponent);
    EXPECT_LT(p(1.0), 2.0);
}

TEST(AlphaProfile, PlateauFlatInsideAboveOutside) {
    const auto p = AlphaProfile::plateau(0.8, 0.3, 0.6, 1.0, 2.0, 0.5, 1.0);
    for (double t : {0.3, 0.45, 0.6}) EXPECT_EQ(p(t), 0.8);
    EXPECT_NEAR(p(0.7), 0.8 + 0.01, 1e-15);
    EXPECT_NEAR(p(0.1), 0.8 + 0.5 * 0.2, 1e-15);
    EXPECT_GT(p(0.0), 0.8);
}

TEST(AlphaProfile, RejectsInvalidParameters) {
    EXPECT_THROW(AlphaProfile::constant(0.0), DomainError);
    EXPECT_THROW(AlphaProfile::constant(2.5), DomainError);
    EXPECT_THROW(AlphaProfile::unique_min(2.0, 0.5, 1.0, 1.0), DomainError);
    EXPECT_THROW(AlphaProfile::plateau(1.0, 0.6, 0.3, 1.0, 1.0, 1.0, 1.0), DomainError);
    EXPECT_THROW(AlphaProfile::plateau(1.0, 0.3, 0.6, 0.0, 1.0, 1.0, 1.0), DomainError);
}

namespace {

json unique_min_doc() {
    return json::parse(R"({
      "name": "u",
      "k": 1, "k1": 1, "T": 1.0,
      "profiles": [{"kind": "unique_min", "alpha0": 1.0, "t0": 0.5, "M": 1.0, "beta": 2.0, "delta_log": 3.0}],
      "variance_scales": [{"form": "constant", "value": 1.0}]
    })");
}

std::string error_path(const json& doc) {
    try {
        field_spec_from_json(doc);
    } catch (const SpecError& e) {
        return e.path();
    }
    return "<no error>";
}

}  // namespace

TEST(FieldSpecJson, LoadsDocument) {
    const auto spec = field_spec_from_json(unique_min_doc());
    EXPECT_EQ(spec.k, 1U);
    EXPECT_EQ(spec.k1, 1U);
    EXPECT_EQ(spec.profiles[0].kind(), ProfileKind::UniqueMin);
    EXPECT_EQ(spec.profiles[0].delta_log(), 3.0);
    EXPECT_EQ(spec.kernel, KernelModel::TimeChangedMfbm);
    EXPECT_EQ(spec.lower, 0.0);
}

TEST(FieldSpecJson, RoundTrip) {
    const auto spec = field_spec_from_json(json::parse(R"({
      "k": 2, "k1": 1, "T": 1.0,
      "profiles": [
        {"kind": "unique_min", "alpha0": 1.0, "t0": 0.0, "M": 0.5, "beta": 1.0},
        {"kind": "plateau", "alpha0": 0.8, "a": 0.3, "b": 0.6, "M": 1.0, "beta": 2.0, "M_tilde": 0.5, "beta_tilde": 2.0}
      ],
      "variance_scales": [
        {"form": "polynomial", "coefficients": [[1.0, 0.5], [1.0]]},
        {"form": "grid", "points": [0.0, 0.5, 1.0], "values": [0.8, 1.0, 1.4]}
      ]
    })"));
    const auto again = field_spec_from_json(to_json(spec));
    EXPECT_EQ(to_json(again), to_json(spec));
    const std::vector<double> t{0.2, 0.75};
    EXPECT_DOUBLE_EQ(again.variance_scales[0](t), 1.1);
    EXPECT_DOUBLE_EQ(again.variance_scales[1](t), 1.2);
}

TEST(FieldSpecJson, SchemaErrorsCarryPath) {
    auto doc = unique_min_doc();
    doc.erase("T");
    EXPECT_EQ(error_path(doc), "/T");

    doc = unique_min_doc();
    doc["profiles"][0]["kind"] = "wiggly";
    EXPECT_EQ(error_path(doc), "/profiles/0/kind");

    doc = unique_min_doc();
    doc["profiles"][0].erase("M");
    EXPECT_EQ(error_path(doc), "/profiles/0/M");

    doc = unique_min_doc();
    doc["variance_scales"][0] = {{"form", "grid"}, {"points", {0.0, 1.0}}, {"values", {1.0}}};
    EXPECT_EQ(error_path(doc), "/variance_scales/0/values");

    doc = unique_min_doc();
    doc["k1"] = 0;
    EXPECT_EQ(error_path(doc), "/profiles/0/kind");

    doc = unique_min_doc();
    doc["variance_scales"][0]["form"] = "spline";
    EXPECT_EQ(error_path(doc), "/variance_scales/0/form");
}

TEST(VarianceScale, GridMultilinearWithConstantExtrapolation) {
    VarianceScale s(VarianceScale::Grid{{0, 1}, {{0.0, 1.0}, {0.0, 2.0}}, {1.0, 3.0, 2.0, 6.0}});
    const std::vector<double> mid{0.5, 1.0};
    EXPECT_DOUBLE_EQ(s(mid), 0.25 * (1.0 + 3.0 + 2.0 + 6.0));
    const std::vector<double> outside{2.0, -1.0};
    EXPECT_DOUBLE_EQ(s(outside), 2.0);
    EXPECT_FALSE(s.depends_only_on(0));
}

TEST(VarianceScale, StandardizedMfbmScale) {
    const auto p = AlphaProfile::unique_min(1.0, 1.0, 1.0, 2.0);
    VarianceScale s(VarianceScale::StandardizedMfbm{0, 2, p});
    const std::vector<double> t{1.5, 0.7};
    EXPECT_NEAR(s(t), std::pow(1.5, -p(1.5)) / 4.0, 1e-15);
    EXPECT_TRUE(s.depends_only_on(0));
}
