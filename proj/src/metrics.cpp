#include "elimpcl/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <limits>

#include "elimpcl/errors.hpp"

namespace elimpcl {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void put_double(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

ProbeResult::ProbeResult()
    : target_accuracy(kNaN), noise_rate(kNaN), tt_noise_rate(kNaN) {}

MetricsRow::MetricsRow()
    : target_accuracy(kNaN),
      noise_rate(kNaN),
      tt_noise_rate(kNaN),
      mean_l_std(kNaN),
      mean_l_mix(kNaN),
      lambda_mean_intra(kNaN),
      lambda_mean_inter(kNaN) {}

EpochProbe make_ground_truth_probe(const Dataset& labeled_target) {
  return [data = labeled_target](const EpochView& view) {
    const Eigen::Index n = data.size();
    ProbeResult res;
    res.target_accuracy = accuracy(view.fused, data.inputs, data.labels);

    Eigen::Index wrong = 0;
    std::vector<Eigen::Index> class_total(
        static_cast<std::size_t>(data.class_count), 0);
    std::vector<Eigen::Index> class_wrong(
        static_cast<std::size_t>(data.class_count), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(data.labels(i));
      ++class_total[c];
      if (view.pseudo.hard(i) != data.labels(i)) {
        ++wrong;
        ++class_wrong[c];
      }
    }
    res.noise_rate = static_cast<double>(wrong) / static_cast<double>(n);

    if (!view.split.trustworthy.empty()) {
      Eigen::Index tt_wrong = 0;
      for (int i : view.split.trustworthy)
        if (view.pseudo.hard(i) != data.labels(i)) ++tt_wrong;
      res.tt_noise_rate = static_cast<double>(tt_wrong) /
                          static_cast<double>(view.split.trustworthy.size());
    }

    res.class_noise_rate.resize(static_cast<std::size_t>(data.class_count), kNaN);
    for (int c = 0; c < data.class_count; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      if (class_total[ci] > 0)
        res.class_noise_rate[ci] = static_cast<double>(class_wrong[ci]) /
                                   static_cast<double>(class_total[ci]);
    }
    return res;
  };
}

void write_metrics_csv(const MetricsLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("write_metrics_csv: cannot write " + path);
  out << "# prng: " << log.prng << "\n";
  out << "# seed: " << log.seed << "\n";
  out << "epoch,r,target_accuracy,noise_rate,tt_noise_rate";
  for (int c = 0; c < log.class_count; ++c) out << ",noise_rate_class" << c;
  out << ",mean_l_std,mean_l_mix,lambda_mean_intra,lambda_mean_inter"
      << ",degenerate_prototypes,empty_tt\n";
  for (const auto& row : log.rows) {
    out << row.epoch << ",";
    put_double(out, row.r);
    out << ",";
    put_double(out, row.target_accuracy);
    out << ",";
    put_double(out, row.noise_rate);
    out << ",";
    put_double(out, row.tt_noise_rate);
    for (int c = 0; c < log.class_count; ++c) {
      out << ",";
      const auto ci = static_cast<std::size_t>(c);
      put_double(out, ci < row.class_noise_rate.size() ? row.class_noise_rate[ci]
                                                       : kNaN);
    }
    out << ",";
    put_double(out, row.mean_l_std);
    out << ",";
    put_double(out, row.mean_l_mix);
    out << ",";
    put_double(out, row.lambda_mean_intra);
    out << ",";
    put_double(out, row.lambda_mean_inter);
    out << "," << row.degenerate_prototypes << "," << (row.empty_tt ? 1 : 0)
        << "\n";
  }
}

}  // namespace elimpcl
