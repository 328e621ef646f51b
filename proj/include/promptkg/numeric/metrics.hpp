#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "promptkg/kg/graph.hpp"

namespace promptkg::numeric {

struct IntervalPrediction {
    double y_hat = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
};

struct IntervalMetrics {
    double icr = 0.0;  // share of truths with y_min <= y <= y_max
    double iw = 0.0;   // mean y_max - y_min
};

// Throws ContractViolation on empty input or a length mismatch.
IntervalMetrics interval_metrics(std::span<const IntervalPrediction> preds, std::span<const double> truths);

bool covers(const IntervalPrediction& p, double truth);

// Removes values whose leave-one-out z-score exceeds `z_threshold`: each
// value is compared with the mean and population standard deviation of the
// other values (a value differing from a constant remainder counts as
// infinitely far). No-op for fewer than 3 values or zero overall spread.
// Throws ContractViolation unless z_threshold > 0.
std::vector<double> filter_outliers(std::span<const double> values, double z_threshold);
// Same test, returning the kept positions.
std::vector<std::size_t> inlier_positions(std::span<const double> values, double z_threshold);

// n distinct data properties of `g`, uniformly without replacement.
// Throws SizeError when n exceeds the number of data properties.
std::vector<kg::RelationId> select_property_subset(const kg::KnowledgeGraph& g, std::size_t n, std::uint64_t seed);

struct PropertyRow {
    std::string property;
    std::size_t n = 0;
    double y_avg = 0.0;
    double sigma = 0.0;  // population standard deviation of y
    double y_hat_avg = 0.0;
    double icr = 0.0;
    double iw = 0.0;
    double mse = 0.0;
    double mae = 0.0;
};

// Throws ContractViolation on empty input or a length mismatch.
PropertyRow property_row(const std::string& property, std::span<const IntervalPrediction> preds,
                         std::span<const double> truths);

// "property,n,y_avg,sigma,y_hat_avg,icr,iw,mse,mae"
std::string numeric_csv_header();
std::string numeric_csv_row(const PropertyRow& r);
void write_numeric_table(std::ostream& out, std::span<const PropertyRow> rows);

}  // namespace promptkg::numeric
