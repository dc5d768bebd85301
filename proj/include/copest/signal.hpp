// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "copest/errors.hpp"

namespace copest::signal {

/// Uniformly sampled multi-channel series. All channels share one length.
class TimeSeries {
 public:
  TimeSeries(double sample_rate, double start_time = 0.0)
      : sample_rate_(sample_rate), start_time_(start_time) {
    if (sample_rate <= 0.0) {
      throw ConfigError("TimeSeries: sample rate must be positive");
    }
  }

  void add_channel(std::string name, Eigen::VectorXd values);

  double sample_rate() const { return sample_rate_; }
  double start_time() const { return start_time_; }
  void set_start_time(double t) { start_time_ = t; }

  Eigen::Index length() const {
    return channels_.empty() ? 0 : channels_.front().size();
  }
  std::size_t channel_count() const { return channels_.size(); }

  const std::vector<std::string>& names() const { return names_; }
  const Eigen::VectorXd& channel(std::size_t idx) const { return channels_.at(idx); }
  const Eigen::VectorXd& channel(const std::string& name) const;
  Eigen::VectorXd& mutable_channel(std::size_t idx) { return channels_.at(idx); }

  double time_at(Eigen::Index k) const {
    return start_time_ + static_cast<double>(k) / sample_rate_;
  }

 private:
  double sample_rate_;
  double start_time_;
  std::vector<std::string> names_;
  std::vector<Eigen::VectorXd> channels_;
};

/// Discrete Butterworth low-pass (bilinear transform with frequency
/// prewarping), applied forward-backward for zero phase. Output length
/// equals input length; DC passes exactly.
TimeSeries butterworth_lowpass(const TimeSeries& x, double cutoff_hz, int order);

/// Single-channel variant used internally and by tests.
Eigen::VectorXd butterworth_lowpass(const Eigen::VectorXd& x, double sample_rate,
                                    double cutoff_hz, int order);

/// Expanded transfer-function coefficients (b, a) of the designed filter,
/// a[0] = 1. Exposed so the design can be compared against references.
std::pair<std::vector<double>, std::vector<double>> butterworth_coefficients(
    double sample_rate, double cutoff_hz, int order);

/// y[k] = (x[k+1] - x[k-1]) * fs / 2 on interior samples, one-sided first
/// differences at the endpoints. Length preserved; requires length >= 3.
TimeSeries central_difference(const TimeSeries& x);
Eigen::VectorXd central_difference(const Eigen::VectorXd& x, double sample_rate);

/// Removes floor(seconds * fs) samples from each end and advances start_time.
TimeSeries trim_edges(const TimeSeries& x, double seconds);

/// Number of samples trim_edges removes from each end.
Eigen::Index trim_count(double seconds, double sample_rate, Eigen::Index length);

}  // namespace copest::signal
