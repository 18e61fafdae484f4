#include "wrl/evaluate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <future>
#include <sstream>
#include <stdexcept>

#include "wrl/io.hpp"

namespace wrl {

namespace {

bool known_parameter(const std::string& p) { return p == "force_mag" || p == "mass_pole"; }

// Fixed two decimals, enough for plot coordinates, deterministic bytes.
std::string svg_num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  if (ec != std::errc()) throw std::runtime_error("svg_num: conversion failed");
  return std::string(buf, p);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out.push_back(c);
  }
  return out;
}

const char* kPalette[] = {"#2563eb", "#dc2626", "#059669", "#9333ea", "#ea580c", "#0891b2"};

std::string render_sweep_svg(const std::vector<SweepRow>& rows, const std::string& parameter,
                             int max_steps) {
  // Distinct policies in first-appearance order; rows per policy keep file order.
  std::vector<std::string> names;
  for (const SweepRow& r : rows)
    if (std::find(names.begin(), names.end(), r.policy) == names.end()) names.push_back(r.policy);

  double x_min = rows.front().value, x_max = rows.front().value;
  double y_max = static_cast<double>(max_steps);
  for (const SweepRow& r : rows) {
    x_min = std::min(x_min, r.value);
    x_max = std::max(x_max, r.value);
    y_max = std::max(y_max, r.mean + r.std_dev);
  }
  if (x_max == x_min) {
    x_min -= 1.0;
    x_max += 1.0;
  }
  y_max = std::ceil(y_max / 10.0) * 10.0;

  const double W = 720, H = 480, L = 70, R = 24, T = 36, B = 54;
  const double pw = W - L - R, ph = H - T - B;
  auto px = [&](double v) { return L + pw * (v - x_min) / (x_max - x_min); };
  auto py = [&](double v) { return T + ph * (1.0 - v / y_max); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_num(W) << "\" height=\""
     << svg_num(H) << "\" viewBox=\"0 0 " << svg_num(W) << " " << svg_num(H) << "\">\n";
  os << "<rect width=\"" << svg_num(W) << "\" height=\"" << svg_num(H) << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << svg_num(L) << "\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" "
        "fill=\"#111\">survived steps vs "
     << xml_escape(parameter) << "</text>\n";

  // Axes and ticks.
  os << "<line x1=\"" << svg_num(L) << "\" y1=\"" << svg_num(T + ph) << "\" x2=\""
     << svg_num(L + pw) << "\" y2=\"" << svg_num(T + ph) << "\" stroke=\"#333\"/>\n";
  os << "<line x1=\"" << svg_num(L) << "\" y1=\"" << svg_num(T) << "\" x2=\"" << svg_num(L)
     << "\" y2=\"" << svg_num(T + ph) << "\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = y_max * i / 5.0;
    const double yy = py(v);
    os << "<line x1=\"" << svg_num(L) << "\" y1=\"" << svg_num(yy) << "\" x2=\"" << svg_num(L + pw)
       << "\" y2=\"" << svg_num(yy) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << svg_num(L - 8) << "\" y=\"" << svg_num(yy + 4)
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\" text-anchor=\"end\">"
       << format_double(v) << "</text>\n";
  }
  std::vector<double> ticks;
  for (const SweepRow& r : rows)
    if (std::find(ticks.begin(), ticks.end(), r.value) == ticks.end()) ticks.push_back(r.value);
  std::sort(ticks.begin(), ticks.end());
  for (double v : ticks) {
    const double xx = px(v);
    os << "<line x1=\"" << svg_num(xx) << "\" y1=\"" << svg_num(T + ph) << "\" x2=\""
       << svg_num(xx) << "\" y2=\"" << svg_num(T + ph + 5) << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << svg_num(xx) << "\" y=\"" << svg_num(T + ph + 20)
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\" text-anchor=\"middle\">"
       << format_double(v) << "</text>\n";
  }
  os << "<text x=\"" << svg_num(L + pw / 2) << "\" y=\"" << svg_num(H - 14)
     << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#111\" text-anchor=\"middle\">"
     << xml_escape(parameter) << "</text>\n";
  os << "<text x=\"18\" y=\"" << svg_num(T + ph / 2)
     << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#111\" text-anchor=\"middle\" "
        "transform=\"rotate(-90 18 "
     << svg_num(T + ph / 2) << ")\">survived steps</text>\n";

  for (std::size_t pi = 0; pi < names.size(); ++pi) {
    const char* color = kPalette[pi % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::vector<const SweepRow*> series;
    for (const SweepRow& r : rows)
      if (r.policy == names[pi]) series.push_back(&r);
    std::sort(series.begin(), series.end(),
              [](const SweepRow* a, const SweepRow* b) { return a->value < b->value; });

    // One-std band: upper edge left to right, lower edge back.
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (const SweepRow* r : series)
      os << svg_num(px(r->value)) << "," << svg_num(py(std::min(y_max, r->mean + r->std_dev)))
         << " ";
    for (auto it = series.rbegin(); it != series.rend(); ++it)
      os << svg_num(px((*it)->value)) << "," << svg_num(py(std::max(0.0, (*it)->mean - (*it)->std_dev)))
         << " ";
    os << "\"/>\n";

    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const SweepRow* r : series) os << svg_num(px(r->value)) << "," << svg_num(py(r->mean)) << " ";
    os << "\"/>\n";
    for (const SweepRow* r : series)
      os << "<circle cx=\"" << svg_num(px(r->value)) << "\" cy=\"" << svg_num(py(r->mean))
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";

    const double ly = T + 16 + 18.0 * static_cast<double>(pi);
    os << "<line x1=\"" << svg_num(L + pw - 150) << "\" y1=\"" << svg_num(ly) << "\" x2=\""
       << svg_num(L + pw - 126) << "\" y2=\"" << svg_num(ly) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << svg_num(L + pw - 120) << "\" y=\"" << svg_num(ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">" << xml_escape(names[pi])
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

ActionSampler make_policy_sampler(const DenseNet& actor, EvalMode mode) {
  if (actor.head() != OutputHead::Softmax)
    throw std::invalid_argument("make_policy_sampler: actor must have a softmax head");
  if (mode == EvalMode::Stochastic) {
    return [net = actor](std::span<const double> s, Rng& rng) {
      return rng.categorical(net.policy_forward(s));
    };
  }
  return [net = actor](std::span<const double> s, Rng&) {
    const std::vector<double> pi = net.policy_forward(s);
    int best = 0;
    for (std::size_t i = 1; i < pi.size(); ++i)
      if (pi[i] > pi[best]) best = static_cast<int>(i);
    return best;
  };
}

std::vector<int> evaluate_episodes(const DenseNet& actor, const CartPoleParams& env_params,
                                   int episodes, std::uint64_t seed_base, EvalMode mode) {
  if (episodes < 1) throw std::invalid_argument("evaluate_episodes: episodes must be >= 1");
  env_params.validate();
  const ActionSampler sampler = make_policy_sampler(actor, mode);
  std::vector<int> counts;
  counts.reserve(episodes);
  for (int i = 0; i < episodes; ++i) {
    const EpisodeResult ep =
        run_episode(sampler, env_params, seed_base + static_cast<std::uint64_t>(i),
                    env_params.max_steps);
    counts.push_back(ep.survived_steps);
  }
  return counts;
}

EvalStats stats_of(const std::vector<int>& counts) {
  if (counts.empty()) throw std::invalid_argument("stats_of: empty sample");
  const double n = static_cast<double>(counts.size());
  double mean = 0.0;
  for (int c : counts) mean += static_cast<double>(c);
  mean /= n;
  double var = 0.0;
  for (int c : counts) {
    const double d = static_cast<double>(c) - mean;
    var += d * d;
  }
  var /= n;
  return EvalStats{mean, std::sqrt(var), static_cast<int>(counts.size())};
}

EvalStats evaluate_policy(const DenseNet& actor, const CartPoleParams& env_params, int episodes,
                          std::uint64_t seed_base, EvalMode mode) {
  return stats_of(evaluate_episodes(actor, env_params, episodes, seed_base, mode));
}

std::vector<double> default_grid(const std::string& parameter) {
  if (parameter == "force_mag") return {5, 10, 20, 40, 60, 80, 100, 120};
  if (parameter == "mass_pole") return {0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
  throw std::invalid_argument("default_grid: unknown parameter '" + parameter + "'");
}

CartPoleParams with_parameter(CartPoleParams base, const std::string& parameter, double value) {
  if (parameter == "force_mag") {
    base.force_mag = value;
  } else if (parameter == "mass_pole") {
    base.mass_pole = value;
  } else {
    throw std::invalid_argument("with_parameter: unknown parameter '" + parameter + "'");
  }
  return base;
}

void SweepSpec::validate() const {
  if (!known_parameter(parameter))
    throw std::invalid_argument("SweepSpec: parameter must be force_mag or mass_pole");
  if (episodes_per_point < 1)
    throw std::invalid_argument("SweepSpec: episodes_per_point must be >= 1");
  for (double v : grid)
    if (!(v > 0.0)) throw std::invalid_argument("SweepSpec: grid values must be positive");
  base_params.validate();
  for (const Policy& p : policies)
    if (p.actor.head() != OutputHead::Softmax)
      throw std::invalid_argument("SweepSpec: policy '" + p.name + "' is not a softmax actor");
}

SweepReport run_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::vector<double> grid = spec.grid.empty() ? default_grid(spec.parameter) : spec.grid;

  SweepReport report;
  report.seed_base = spec.seed_base;
  report.episodes_per_point = spec.episodes_per_point;
  report.mode = spec.mode == EvalMode::Stochastic ? "stochastic" : "greedy";
  report.max_steps = spec.base_params.max_steps;

  std::vector<std::future<EvalStats>> cells;
  for (const SweepSpec::Policy& pol : spec.policies) {
    for (double v : grid) {
      cells.push_back(std::async(std::launch::async, [&spec, &pol, v]() {
        const CartPoleParams params = with_parameter(spec.base_params, spec.parameter, v);
        params.validate();
        return evaluate_policy(pol.actor, params, spec.episodes_per_point, spec.seed_base,
                               spec.mode);
      }));
    }
  }
  std::size_t k = 0;
  for (const SweepSpec::Policy& pol : spec.policies) {
    for (double v : grid) {
      const EvalStats st = cells[k++].get();
      report.rows.push_back(SweepRow{pol.name, spec.parameter, v, st.mean, st.std_dev,
                                     st.episodes});
    }
  }
  return report;
}

std::vector<std::string> emit_report(const SweepReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;

  std::ostringstream csv;
  csv << "policy,parameter,value,mean,std,n\n";
  for (const SweepRow& r : report.rows) {
    csv << r.policy << "," << r.parameter << "," << format_double(r.value) << ","
        << format_double(r.mean) << "," << format_double(r.std_dev) << "," << r.episodes << "\n";
  }
  const std::string csv_path = out_dir + "/sweep.csv";
  write_text_file(csv_path, csv.str());
  written.push_back(csv_path);

  std::vector<std::string> params_seen;
  for (const SweepRow& r : report.rows)
    if (std::find(params_seen.begin(), params_seen.end(), r.parameter) == params_seen.end())
      params_seen.push_back(r.parameter);
  for (const std::string& param : params_seen) {
    std::vector<SweepRow> rows;
    for (const SweepRow& r : report.rows)
      if (r.parameter == param) rows.push_back(r);
    const std::string path = out_dir + "/sweep_" + param + ".svg";
    write_text_file(path, render_sweep_svg(rows, param, report.max_steps));
    written.push_back(path);
  }
  return written;
}

}  // namespace wrl
