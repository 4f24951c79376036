#include "mirec/synthetic.hpp"

#include "mirec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace mirec::synthetic {

namespace {

std::string tag(const char* prefix, int value) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%s%04d", prefix, value);
  return buf;
}

}  // namespace

std::vector<data::InteractionRecord> generate_log(const config::RunConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, /*tag=*/101));

  // Within-cluster popularity CDF, Zipf over item rank.
  std::vector<double> cdf(static_cast<std::size_t>(cfg.synthetic_items_per_cluster));
  double acc = 0.0;
  for (int r = 0; r < cfg.synthetic_items_per_cluster; ++r) {
    acc += 1.0 / std::pow(static_cast<double>(r + 1), cfg.synthetic_zipf);
    cdf[static_cast<std::size_t>(r)] = acc;
  }
  for (auto& v : cdf) v /= acc;

  auto draw_rank = [&]() {
    const double u = rng.uniform();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    return static_cast<int>(it - cdf.begin());
  };

  std::vector<data::InteractionRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.synthetic_users) *
                  static_cast<std::size_t>(cfg.synthetic_events_per_user));
  std::vector<int> clusters(static_cast<std::size_t>(cfg.synthetic_clusters));
  std::iota(clusters.begin(), clusters.end(), 0);

  for (int u = 0; u < cfg.synthetic_users; ++u) {
    std::vector<int> owned = clusters;
    rng.shuffle(owned);
    owned.resize(static_cast<std::size_t>(cfg.synthetic_clusters_per_user));
    const std::string user = tag("u", u);
    for (int e = 0; e < cfg.synthetic_events_per_user; ++e) {
      const int cluster =
          owned[static_cast<std::size_t>(rng.uniform_int(owned.size()))];
      const int item = cluster * cfg.synthetic_items_per_cluster + draw_rank();
      records.push_back({user, tag("i", item), {tag("c", cluster)},
                         static_cast<std::int64_t>(e + 1)});
    }
  }
  return records;
}

std::string to_log_text(const std::vector<data::InteractionRecord>& records) {
  std::ostringstream out;
  for (const auto& r : records) {
    out << r.user_id << ',' << r.item_id;
    for (const auto& s : r.side_ids) out << ',' << s;
    out << ',' << r.timestamp << '\n';
  }
  return out.str();
}

}  // namespace mirec::synthetic
