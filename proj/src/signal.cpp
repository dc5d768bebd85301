// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#include "copest/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace copest::signal {

void TimeSeries::add_channel(std::string name, Eigen::VectorXd values) {
  if (!channels_.empty() && values.size() != channels_.front().size()) {
    throw ConfigError("TimeSeries: channel '" + name + "' length " +
                      std::to_string(values.size()) +
                      " does not match existing length " +
                      std::to_string(channels_.front().size()));
  }
  names_.push_back(std::move(name));
  channels_.push_back(std::move(values));
}

const Eigen::VectorXd& TimeSeries::channel(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return channels_[i];
  }
  throw ConfigError("TimeSeries: no channel named '" + name + "'");
}

namespace {

// Second-order (or first-order when b2/a2 are zero) section, direct form II
// transposed, normalized to unit DC gain.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

std::vector<Biquad> design_butterworth(double sample_rate, double cutoff_hz,
                                       int order) {
  if (order < 1) throw ConfigError("butterworth_lowpass: order must be >= 1");
  if (cutoff_hz <= 0.0 || cutoff_hz >= sample_rate / 2.0) {
    throw ConfigError("butterworth_lowpass: cutoff " +
                      std::to_string(cutoff_hz) +
                      " Hz must lie in (0, Nyquist) for fs = " +
                      std::to_string(sample_rate) + " Hz");
  }

  // Prewarp so the -3 dB point lands exactly at cutoff_hz after the
  // bilinear transform.
  const double fs2 = 2.0 * sample_rate;
  const double wc = fs2 * std::tan(M_PI * cutoff_hz / sample_rate);

  std::vector<Biquad> sections;
  for (int k = 1; k <= order / 2; ++k) {
    const double theta = M_PI * (2.0 * k + order - 1.0) / (2.0 * order);
    const std::complex<double> p = wc * std::polar(1.0, theta);
    const std::complex<double> zp = (fs2 + p) / (fs2 - p);
    const double a1 = -2.0 * zp.real();
    const double a2 = std::norm(zp);
    const double g = (1.0 + a1 + a2) / 4.0;
    sections.push_back({g, 2.0 * g, g, a1, a2});
  }
  if (order % 2 == 1) {
    const double p = -wc;  // real pole
    const double zp = (fs2 + p) / (fs2 - p);
    const double a1 = -zp;
    const double g = (1.0 + a1) / 2.0;
    sections.push_back({g, g, 0.0, a1, 0.0});
  }
  return sections;
}

// One pass through the cascade with steady-state initial conditions scaled
// by the first sample, so constants pass through exactly from sample 0.
Eigen::VectorXd run_cascade(const std::vector<Biquad>& sections,
                            Eigen::VectorXd x) {
  for (const Biquad& s : sections) {
    double z1 = (1.0 - s.b0) * x[0];
    double z2 = (s.b2 - s.a2) * x[0];
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double in = x[k];
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      x[k] = out;
    }
  }
  return x;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> butterworth_coefficients(
    double sample_rate, double cutoff_hz, int order) {
  const auto sections = design_butterworth(sample_rate, cutoff_hz, order);
  std::vector<double> b{1.0}, a{1.0};
  auto convolve = [](const std::vector<double>& p, const std::vector<double>& q) {
    std::vector<double> r(p.size() + q.size() - 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
    return r;
  };
  for (const Biquad& s : sections) {
    const bool first_order = (s.b2 == 0.0 && s.a2 == 0.0);
    if (first_order) {
      b = convolve(b, {s.b0, s.b1});
      a = convolve(a, {1.0, s.a1});
    } else {
      b = convolve(b, {s.b0, s.b1, s.b2});
      a = convolve(a, {1.0, s.a1, s.a2});
    }
  }
  return {b, a};
}

Eigen::VectorXd butterworth_lowpass(const Eigen::VectorXd& x, double sample_rate,
                                    double cutoff_hz, int order) {
  const auto sections = design_butterworth(sample_rate, cutoff_hz, order);
  const Eigen::Index n = x.size();
  if (n < 2) return x;

  // Odd extension at both ends shields the interior from edge transients.
  const Eigen::Index pad = std::min<Eigen::Index>(n - 1, 3 * (order + 1));
  Eigen::VectorXd padded(n + 2 * pad);
  for (Eigen::Index k = 0; k < pad; ++k) {
    padded[k] = 2.0 * x[0] - x[pad - k];
    padded[n + pad + k] = 2.0 * x[n - 1] - x[n - 2 - k];
  }
  padded.segment(pad, n) = x;

  Eigen::VectorXd y = run_cascade(sections, padded);
  y.reverseInPlace();
  y = run_cascade(sections, y);
  y.reverseInPlace();
  return y.segment(pad, n);
}

TimeSeries butterworth_lowpass(const TimeSeries& x, double cutoff_hz, int order) {
  TimeSeries out(x.sample_rate(), x.start_time());
  for (std::size_t i = 0; i < x.channel_count(); ++i) {
    out.add_channel(x.names()[i],
                    butterworth_lowpass(x.channel(i), x.sample_rate(), cutoff_hz,
                                        order));
  }
  return out;
}

Eigen::VectorXd central_difference(const Eigen::VectorXd& x, double sample_rate) {
  const Eigen::Index n = x.size();
  if (n < 3) {
    throw ConfigError("central_difference: need at least 3 samples, got " +
                      std::to_string(n));
  }
  Eigen::VectorXd y(n);
  y[0] = (x[1] - x[0]) * sample_rate;
  y[n - 1] = (x[n - 1] - x[n - 2]) * sample_rate;
  for (Eigen::Index k = 1; k + 1 < n; ++k) {
    y[k] = (x[k + 1] - x[k - 1]) * sample_rate * 0.5;
  }
  return y;
}

TimeSeries central_difference(const TimeSeries& x) {
  TimeSeries out(x.sample_rate(), x.start_time());
  for (std::size_t i = 0; i < x.channel_count(); ++i) {
    out.add_channel(x.names()[i], central_difference(x.channel(i), x.sample_rate()));
  }
  return out;
}

Eigen::Index trim_count(double seconds, double sample_rate, Eigen::Index length) {
  if (seconds < 0.0) throw ConfigError("trim_edges: negative trim");
  const auto n = static_cast<Eigen::Index>(std::floor(seconds * sample_rate));
  if (2 * n >= length) {
    throw ConfigError("trim_edges: trimming " + std::to_string(n) +
                      " samples per end exceeds series length " +
                      std::to_string(length));
  }
  return n;
}

TimeSeries trim_edges(const TimeSeries& x, double seconds) {
  const Eigen::Index n = trim_count(seconds, x.sample_rate(), x.length());
  TimeSeries out(x.sample_rate(),
                 x.start_time() + static_cast<double>(n) / x.sample_rate());
  for (std::size_t i = 0; i < x.channel_count(); ++i) {
    out.add_channel(x.names()[i],
                    x.channel(i).segment(n, x.length() - 2 * n).eval());
  }
  return out;
}

}  // namespace copest::signal
