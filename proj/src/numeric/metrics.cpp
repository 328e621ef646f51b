#include "promptkg/numeric/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"

namespace promptkg::numeric {

bool covers(const IntervalPrediction& p, double truth) { return p.y_min <= truth && truth <= p.y_max; }

IntervalMetrics interval_metrics(std::span<const IntervalPrediction> preds, std::span<const double> truths) {
    if (preds.empty() || preds.size() != truths.size())
        throw ContractViolation("interval_metrics: empty input or length mismatch");
    std::size_t covered = 0;
    double width = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (covers(preds[i], truths[i])) ++covered;
        width += preds[i].y_max - preds[i].y_min;
    }
    const double n = static_cast<double>(preds.size());
    return {static_cast<double>(covered) / n, width / n};
}

namespace {

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double population_sd(std::span<const double> v, double mu) {
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

std::vector<std::size_t> inlier_positions(std::span<const double> values, double z_threshold) {
    if (!(z_threshold > 0)) throw ContractViolation("z threshold must be positive");
    std::vector<std::size_t> keep(values.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    if (values.size() < 3 || population_sd(values, mean(values)) == 0.0) return keep;

    const double n = static_cast<double>(values.size());
    const double mu = mean(values);
    double ss = 0.0;  // squared deviations about the overall mean
    for (double x : values) ss += (x - mu) * (x - mu);
    keep.clear();
    for (std::size_t i = 0; i < values.size(); ++i) {
        // mean and population sd of the other n - 1 values
        const double d = values[i] - mu;
        const double m = (n * mu - values[i]) / (n - 1);
        double rest_ss = ss - d * d * n / (n - 1);
        if (rest_ss <= 1e-9 * ss) rest_ss = 0.0;
        const double sd = std::sqrt(rest_ss / (n - 1));
        const double dev = std::fabs(values[i] - m);
        const double z = sd == 0.0 ? (dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()) : dev / sd;
        if (!(z > z_threshold)) keep.push_back(i);
    }
    return keep;
}

std::vector<double> filter_outliers(std::span<const double> values, double z_threshold) {
    std::vector<double> out;
    for (auto i : inlier_positions(values, z_threshold)) out.push_back(values[i]);
    return out;
}

std::vector<kg::RelationId> select_property_subset(const kg::KnowledgeGraph& g, std::size_t n, std::uint64_t seed) {
    std::vector<kg::RelationId> props;
    for (auto r : g.relations())
        if (g.vocab().relation_kind(r) == kg::RelationKind::DataProperty) props.push_back(r);
    if (n > props.size())
        throw SizeError("requested " + std::to_string(n) + " properties, graph has " + std::to_string(props.size()));
    std::sort(props.begin(), props.end(), [&](kg::RelationId a, kg::RelationId b) {
        return g.vocab().relation_name(a) < g.vocab().relation_name(b);
    });
    Rng rng(substream_seed(seed, "property-subset"));
    stable_shuffle(props, rng);
    props.resize(n);
    return props;
}

PropertyRow property_row(const std::string& property, std::span<const IntervalPrediction> preds,
                         std::span<const double> truths) {
    const auto im = interval_metrics(preds, truths);
    PropertyRow r;
    r.property = property;
    r.n = preds.size();
    r.y_avg = mean(truths);
    r.sigma = population_sd(truths, r.y_avg);
    double hat = 0.0, se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        hat += preds[i].y_hat;
        const double d = preds[i].y_hat - truths[i];
        se += d * d;
        ae += std::fabs(d);
    }
    const double n = static_cast<double>(preds.size());
    r.y_hat_avg = hat / n;
    r.icr = im.icr;
    r.iw = im.iw;
    r.mse = se / n;
    r.mae = ae / n;
    return r;
}

namespace {

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(8) << v;
    return s.str();
}

}  // namespace

std::string numeric_csv_header() { return "property,n,y_avg,sigma,y_hat_avg,icr,iw,mse,mae"; }

std::string numeric_csv_row(const PropertyRow& r) {
    std::ostringstream s;
    s << r.property << ',' << r.n << ',' << num(r.y_avg) << ',' << num(r.sigma) << ',' << num(r.y_hat_avg) << ','
      << num(r.icr) << ',' << num(r.iw) << ',' << num(r.mse) << ',' << num(r.mae);
    return s.str();
}

void write_numeric_table(std::ostream& out, std::span<const PropertyRow> rows) {
    std::size_t width = 13;
    for (const auto& r : rows) width = std::max(width, r.property.size());
    auto cell = [](double v) {
        std::ostringstream s;
        s << std::setprecision(5) << v;
        return s.str();
    };
    const int w = static_cast<int>(width);
    out << std::left << std::setw(w) << "Data Property" << std::right << std::setw(6) << "N" << std::setw(14)
        << "y_avg" << std::setw(14) << "sigma" << std::setw(14) << "y_hat_avg" << std::setw(8) << "ICR"
        << std::setw(14) << "IW" << '\n';
    for (const auto& r : rows)
        out << std::left << std::setw(w) << r.property << std::right << std::setw(6) << r.n << std::setw(14)
            << cell(r.y_avg) << std::setw(14) << ("±" + cell(r.sigma)) << std::setw(14) << cell(r.y_hat_avg)
            << std::setw(8) << cell(r.icr) << std::setw(14) << cell(r.iw) << '\n';
}

}  // namespace promptkg::numeric
