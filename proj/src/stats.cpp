#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "symscribe/stats.hpp"

namespace symscribe {

std::string_view to_string(StatsError::Kind k) {
  switch (k) {
    case StatsError::Kind::UnknownSite: return "unknown_site";
    case StatsError::Kind::UnknownCategory: return "unknown_category";
    case StatsError::Kind::LengthMismatch: return "length_mismatch";
    case StatsError::Kind::DegenerateInput: return "degenerate_input";
    case StatsError::Kind::TooFewObservations: return "too_few_observations";
  }
  return "unknown";
}

std::string_view to_string(PValueMethod m) {
  switch (m) {
    case PValueMethod::Auto: return "auto";
    case PValueMethod::TApproximation: return "t-approximation";
    case PValueMethod::MonteCarlo: return "monte-carlo";
  }
  return "unknown";
}

std::vector<std::string> category_axis(const Lexicon& lex) {
  std::vector<std::string> out;
  for (const auto& c : lex.categories()) out.push_back(c.id);
  return out;
}

PrevalenceTable build_table(const std::vector<PipelineOutput>& outputs, const std::map<std::string, std::string>& site_of,
                            const std::vector<std::string>& categories) {
  PrevalenceTable t;
  std::set<std::string> sites;
  for (const auto& [_, site] : site_of) sites.insert(site);
  t.sites.assign(sites.begin(), sites.end());

  if (!categories.empty()) {
    t.categories = categories;
  } else {
    std::set<std::string> seen;
    for (const auto& o : outputs) {
      for (const auto& mr : o.mentions) seen.insert(mr.mention.category_id);
    }
    t.categories.assign(seen.begin(), seen.end());
  }

  std::map<std::string, std::size_t> site_index, cat_index;
  for (std::size_t i = 0; i < t.sites.size(); ++i) site_index[t.sites[i]] = i;
  for (std::size_t i = 0; i < t.categories.size(); ++i) cat_index[t.categories[i]] = i;
  t.positive_counts.assign(t.sites.size(), std::vector<std::uint64_t>(t.categories.size(), 0));
  t.negative_counts = t.positive_counts;

  for (const auto& o : outputs) {
    auto s = site_of.find(o.note_id);
    if (s == site_of.end()) throw StatsError(StatsError::Kind::UnknownSite, "note '" + o.note_id + "' has no site");
    const auto si = site_index.at(s->second);
    for (const auto& mr : o.mentions) {
      auto c = cat_index.find(mr.mention.category_id);
      if (c == cat_index.end()) {
        throw StatsError(StatsError::Kind::UnknownCategory, "category '" + mr.mention.category_id + "' is not on the axis");
      }
      auto& counts = mr.assertion.binary == BinaryAssertion::Positive ? t.positive_counts : t.negative_counts;
      ++counts[si][c->second];
    }
  }
  return t;
}

std::map<std::string, std::string> read_site_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read site map " + path);
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw std::runtime_error(path + ": empty site map");
  std::size_t note_col = header->size(), site_col = header->size();
  for (std::size_t i = 0; i < header->size(); ++i) {
    const auto h = std::string(trim((*header)[i]));
    if (h == "note_id" || h == "\xEF\xBB\xBFnote_id") note_col = i;
    if (h == "site_id" || h == "site") site_col = i;
  }
  if (note_col == header->size() || site_col == header->size()) {
    throw std::runtime_error(path + ": site map needs note_id and site_id columns");
  }
  std::map<std::string, std::string> out;
  while (auto row = reader.next()) {
    if (row->size() == 1 && row->front().empty()) continue;
    if (row->size() <= std::max(note_col, site_col)) {
      throw std::runtime_error(path + ":" + std::to_string(reader.line()) + ": short row");
    }
    out[(*row)[note_col]] = (*row)[site_col];
  }
  return out;
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw StatsError(StatsError::Kind::LengthMismatch, "vectors differ in length");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw StatsError(StatsError::Kind::DegenerateInput, "constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

double t_p_value(double rho, std::size_t n) {
  if (std::abs(rho) >= 1.0) return 0.0;
  const double df = static_cast<double>(n) - 2.0;
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

double monte_carlo_p_value(const std::vector<double>& rx, std::vector<double> ry, double rho, std::size_t perms,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double observed = std::abs(rho) - 1e-12;
  std::size_t extreme = 0;
  for (std::size_t p = 0; p < perms; ++p) {
    for (std::size_t i = ry.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(ry[i], ry[pick(rng)]);
    }
    if (std::abs(pearson(rx, ry)) >= observed) ++extreme;
  }
  return (static_cast<double>(extreme) + 1.0) / (static_cast<double>(perms) + 1.0);
}

}  // namespace

CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y, const SpearmanOptions& opts) {
  if (x.size() != y.size()) throw StatsError(StatsError::Kind::LengthMismatch, "vectors differ in length");
  if (x.size() < 3) throw StatsError(StatsError::Kind::TooFewObservations, "spearman needs at least 3 observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  CorrelationResult r;
  r.n = x.size();
  r.rho = pearson(rx, ry);
  r.method = opts.method;
  if (r.method == PValueMethod::Auto) {
    r.method = r.n >= opts.t_min_n ? PValueMethod::TApproximation : PValueMethod::MonteCarlo;
  }
  if (r.method == PValueMethod::TApproximation) {
    r.p_value = t_p_value(r.rho, r.n);
  } else {
    r.permutations = opts.permutations;
    r.seed = opts.seed;
    r.p_value = monte_carlo_p_value(rx, ry, r.rho, opts.permutations, opts.seed);
  }
  return r;
}

namespace {

CorrelationCell cell(const std::vector<double>& a, const std::vector<double>& b, const SpearmanOptions& opts) {
  CorrelationCell c;
  try {
    c.result = spearman(a, b, opts);
  } catch (const StatsError& e) {
    c.error = e.kind();
  }
  return c;
}

std::vector<double> as_doubles(const std::vector<std::uint64_t>& v) { return {v.begin(), v.end()}; }

}  // namespace

CorrelationMatrix pairwise_site_correlations(const PrevalenceTable& table, Polarity polarity,
                                             const SpearmanOptions& opts) {
  if (table.sites.empty()) throw StatsError(StatsError::Kind::TooFewObservations, "no sites");
  if (table.categories.size() < 3) {
    throw StatsError(StatsError::Kind::TooFewObservations, "site correlations need at least 3 categories");
  }
  const auto& counts = table.counts(polarity);
  std::vector<std::vector<double>> vecs;
  for (const auto& row : counts) vecs.push_back(as_doubles(row));
  std::vector<double> overall(table.categories.size(), 0.0);
  for (const auto& v : vecs) {
    for (std::size_t c = 0; c < v.size(); ++c) overall[c] += v[c];
  }

  CorrelationMatrix m;
  m.rows = table.sites;
  m.cols = table.sites;
  m.cols.push_back("overall");
  const auto n = table.sites.size();
  m.cells.assign(n, std::vector<CorrelationCell>(n + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      m.cells[i][j] = cell(vecs[i], vecs[j], opts);
      m.cells[j][i] = m.cells[i][j];
    }
    m.cells[i][n] = cell(vecs[i], overall, opts);
  }
  return m;
}

CorrelationMatrix pairwise_category_correlations(const PrevalenceTable& table, Polarity polarity,
                                                 const SpearmanOptions& opts) {
  if (table.categories.size() < 2) {
    throw StatsError(StatsError::Kind::TooFewObservations, "category correlations need at least 2 categories");
  }
  if (table.sites.size() < 3) {
    throw StatsError(StatsError::Kind::TooFewObservations, "category correlations need at least 3 sites");
  }
  const auto& counts = table.counts(polarity);
  const auto k = table.categories.size();
  std::vector<std::vector<double>> vecs(k, std::vector<double>(table.sites.size()));
  CorrelationMatrix m;
  m.rows = table.categories;
  m.cols = table.categories;
  m.row_totals.assign(k, 0);
  for (std::size_t s = 0; s < table.sites.size(); ++s) {
    for (std::size_t c = 0; c < k; ++c) {
      vecs[c][s] = static_cast<double>(counts[s][c]);
      m.row_totals[c] += counts[s][c];
    }
  }
  m.cells.assign(k, std::vector<CorrelationCell>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      m.cells[i][j] = cell(vecs[i], vecs[j], opts);
      m.cells[j][i] = m.cells[i][j];
    }
  }
  return m;
}

std::string counts_csv(const PrevalenceTable& table) {
  std::string out = "site_id,category_id,positive,negative\n";
  for (std::size_t s = 0; s < table.sites.size(); ++s) {
    for (std::size_t c = 0; c < table.categories.size(); ++c) {
      out += csv::join({table.sites[s], table.categories[c], std::to_string(table.positive_counts[s][c]),
                        std::to_string(table.negative_counts[s][c])});
      out += "\n";
    }
  }
  return out;
}

std::string correlation_csv(const CorrelationMatrix& m) {
  const bool totals = !m.row_totals.empty();
  std::string out = totals ? "row,col,rho,p_value,n,method,error,row_total\n" : "row,col,rho,p_value,n,method,error\n";
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    for (std::size_t j = 0; j < m.cols.size(); ++j) {
      const auto& c = m.cells[i][j];
      std::vector<std::string> f{m.rows[i], m.cols[j]};
      if (c.result) {
        f.push_back(fmt::format("{:.12g}", c.result->rho));
        f.push_back(fmt::format("{:.12g}", c.result->p_value));
        f.push_back(std::to_string(c.result->n));
        f.emplace_back(to_string(c.result->method));
        f.emplace_back();
      } else {
        f.insert(f.end(), {"", "", "", ""});
        f.emplace_back(to_string(*c.error));
      }
      if (totals) f.push_back(std::to_string(m.row_totals[i]));
      out += csv::join(f) + "\n";
    }
  }
  return out;
}

namespace {

nlohmann::ordered_json min_off_diagonal(const CorrelationMatrix& m) {
  std::optional<double> lo;
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    for (std::size_t j = 0; j < m.cols.size(); ++j) {
      if (m.rows[i] == m.cols[j] || !m.cells[i][j].result) continue;
      lo = std::min(lo.value_or(1.0), m.cells[i][j].result->rho);
    }
  }
  return lo ? nlohmann::ordered_json(*lo) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string prevalence_summary_json(const PrevalenceTable& table, const CorrelationMatrix& site_pos,
                                    const CorrelationMatrix& site_neg, const CorrelationMatrix& category_pos,
                                    const SpearmanOptions& opts) {
  nlohmann::ordered_json j;
  j["sites"] = table.sites;
  j["categories"] = table.categories;
  std::uint64_t pos = 0, neg = 0;
  nlohmann::ordered_json per_site = nlohmann::ordered_json::object();
  for (std::size_t s = 0; s < table.sites.size(); ++s) {
    std::uint64_t sp = 0, sn = 0;
    for (auto v : table.positive_counts[s]) sp += v;
    for (auto v : table.negative_counts[s]) sn += v;
    pos += sp;
    neg += sn;
    nlohmann::ordered_json rel_pos = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < table.categories.size(); ++c) {
      rel_pos[table.categories[c]] = sp ? static_cast<double>(table.positive_counts[s][c]) / static_cast<double>(sp) : 0.0;
    }
    per_site[table.sites[s]] = {{"positive", sp}, {"negative", sn}, {"relative_frequency_positive", rel_pos}};
  }
  j["totals"] = {{"positive", pos}, {"negative", neg}};
  j["per_site"] = std::move(per_site);
  j["p_value"] = {{"method", std::string(to_string(opts.method))},
                  {"t_approximation_min_n", opts.t_min_n},
                  {"permutations", opts.permutations},
                  {"seed", opts.seed}};
  j["min_site_rho_positive"] = min_off_diagonal(site_pos);
  j["min_site_rho_negative"] = min_off_diagonal(site_neg);
  j["min_category_rho_positive"] = min_off_diagonal(category_pos);
  return j.dump(2);
}

}  // namespace symscribe
