#include "mirec/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mirec::config {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config: invalid integer for " + key + ": " + value);
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config: invalid unsigned integer for " + key + ": " +
                     value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config: invalid number for " + key + ": " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("config: invalid boolean for " + key + ": " + value);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "seed") {
    seed = parse_uint(key, value);
    seed_set = true;
  } else if (key == "dim") {
    dim = static_cast<int>(parse_int(key, value));
  } else if (key == "max_interests") {
    max_interests = static_cast<int>(parse_int(key, value));
  } else if (key == "routing_iterations") {
    routing_iterations = static_cast<int>(parse_int(key, value));
  } else if (key == "sigma") {
    sigma = parse_double(key, value);
  } else if (key == "attention_p") {
    if (value == "hard") {
      attention_hard = true;
    } else {
      attention_hard = false;
      attention_p = parse_double(key, value);
    }
  } else if (key == "tower_hidden") {
    tower_hidden.clear();
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = trim(part);
      if (!part.empty())
        tower_hidden.push_back(static_cast<int>(parse_int(key, part)));
    }
  } else if (key == "backprop_couplings") {
    backprop_couplings = parse_bool(key, value);
  } else if (key == "negatives") {
    negatives = static_cast<int>(parse_int(key, value));
  } else if (key == "learning_rate") {
    learning_rate = parse_double(key, value);
  } else if (key == "batch_size") {
    batch_size = static_cast<int>(parse_int(key, value));
  } else if (key == "epochs") {
    epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "checkpoint_every") {
    checkpoint_every = static_cast<int>(parse_int(key, value));
  } else if (key == "max_behaviors") {
    max_behaviors = static_cast<int>(parse_int(key, value));
  } else if (key == "min_item_interactions") {
    min_item_interactions = parse_int(key, value);
  } else if (key == "min_user_interactions") {
    min_user_interactions = parse_int(key, value);
  } else if (key == "synthetic_users") {
    synthetic_users = static_cast<int>(parse_int(key, value));
  } else if (key == "synthetic_clusters") {
    synthetic_clusters = static_cast<int>(parse_int(key, value));
  } else if (key == "synthetic_items_per_cluster") {
    synthetic_items_per_cluster = static_cast<int>(parse_int(key, value));
  } else if (key == "synthetic_clusters_per_user") {
    synthetic_clusters_per_user = static_cast<int>(parse_int(key, value));
  } else if (key == "synthetic_events_per_user") {
    synthetic_events_per_user = static_cast<int>(parse_int(key, value));
  } else if (key == "synthetic_zipf") {
    synthetic_zipf = parse_double(key, value);
  } else {
    throw UsageError("config: unknown key: " + key);
  }
}

RunConfig RunConfig::parse_text(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config: line " + std::to_string(line_no) +
                       " is not key = value");
    cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

void RunConfig::validate() const {
  if (!seed_set) throw UsageError("config: seed is mandatory");
  if (dim < 1) throw UsageError("config: dim must be >= 1");
  if (max_interests < 1) throw UsageError("config: max_interests must be >= 1");
  if (routing_iterations < 1)
    throw UsageError("config: routing_iterations must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw UsageError("config: sigma must be finite and > 0");
  if (!attention_hard && (attention_p < 0.0 || !std::isfinite(attention_p)))
    throw UsageError("config: attention_p must be >= 0 or hard");
  for (int w : tower_hidden)
    if (w < 1) throw UsageError("config: tower widths must be >= 1");
  if (negatives < 1) throw UsageError("config: negatives must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw UsageError("config: learning_rate must be >= 0");
  if (batch_size < 1) throw UsageError("config: batch_size must be >= 1");
  if (epochs < 0) throw UsageError("config: epochs must be >= 0");
  if (checkpoint_every < 1)
    throw UsageError("config: checkpoint_every must be >= 1");
  if (max_behaviors < 1) throw UsageError("config: max_behaviors must be >= 1");
  if (min_item_interactions < 1 || min_user_interactions < 1)
    throw UsageError("config: filter thresholds must be >= 1");
  if (synthetic_users < 1 || synthetic_clusters < 1 ||
      synthetic_items_per_cluster < 1 || synthetic_events_per_user < 1)
    throw UsageError("config: synthetic sizes must be >= 1");
  if (synthetic_clusters_per_user < 1 ||
      synthetic_clusters_per_user > synthetic_clusters)
    throw UsageError(
        "config: synthetic_clusters_per_user must be in [1, clusters]");
  if (synthetic_zipf < 0.0)
    throw UsageError("config: synthetic_zipf must be >= 0");
}

std::string RunConfig::canonical_text() const {
  std::ostringstream out;
  out << "attention_p = " << (attention_hard ? "hard" : format_double(attention_p))
      << '\n';
  out << "backprop_couplings = " << (backprop_couplings ? "true" : "false")
      << '\n';
  out << "batch_size = " << batch_size << '\n';
  out << "checkpoint_every = " << checkpoint_every << '\n';
  out << "dim = " << dim << '\n';
  out << "epochs = " << epochs << '\n';
  out << "learning_rate = " << format_double(learning_rate) << '\n';
  out << "max_behaviors = " << max_behaviors << '\n';
  out << "max_interests = " << max_interests << '\n';
  out << "min_item_interactions = " << min_item_interactions << '\n';
  out << "min_user_interactions = " << min_user_interactions << '\n';
  out << "negatives = " << negatives << '\n';
  out << "routing_iterations = " << routing_iterations << '\n';
  out << "seed = " << seed << '\n';
  out << "sigma = " << format_double(sigma) << '\n';
  out << "synthetic_clusters = " << synthetic_clusters << '\n';
  out << "synthetic_clusters_per_user = " << synthetic_clusters_per_user << '\n';
  out << "synthetic_events_per_user = " << synthetic_events_per_user << '\n';
  out << "synthetic_items_per_cluster = " << synthetic_items_per_cluster << '\n';
  out << "synthetic_users = " << synthetic_users << '\n';
  out << "synthetic_zipf = " << format_double(synthetic_zipf) << '\n';
  out << "tower_hidden = ";
  for (std::size_t i = 0; i < tower_hidden.size(); ++i) {
    if (i) out << ',';
    out << tower_hidden[i];
  }
  out << '\n';
  return out.str();
}

std::string RunConfig::digest() const { return to_hex(fnv1a64(canonical_text())); }

routing::RoutingConfig RunConfig::routing_config() const {
  routing::RoutingConfig rc;
  rc.max_interests = max_interests;
  rc.iterations = routing_iterations;
  rc.sigma = sigma;
  rc.backprop_through_couplings = backprop_couplings;
  return rc;
}

model::AttentionConfig RunConfig::attention_config() const {
  model::AttentionConfig ac;
  ac.hard = attention_hard;
  ac.p = attention_p;
  return ac;
}

model::LossConfig RunConfig::loss_config() const {
  model::LossConfig lc;
  lc.negatives = negatives;
  return lc;
}

model::TowerConfig RunConfig::tower_config() const {
  model::TowerConfig tc;
  tc.hidden_widths = tower_hidden;
  tc.output_dim = dim;
  return tc;
}

std::pair<std::string, std::string> parse_override(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0)
    throw UsageError("override must be key=value: " + arg);
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

}  // namespace mirec::config
