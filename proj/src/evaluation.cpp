#include "devrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace devrec::evaluation {

namespace {

bool hit_within(const IssuePrediction& ip, std::size_t n) {
    const std::size_t limit = std::min(n, ip.ranking.size());
    for (std::size_t i = 0; i < limit; ++i) {
        if (ip.fixers.contains(ip.ranking[i])) return true;
    }
    return false;
}

}  // namespace

double topn_hit_rate(const PredictionSet& preds, std::size_t n) {
    if (preds.issues.empty()) {
        throw ValidationError("topn_hit_rate: empty prediction set");
    }
    std::size_t hits = 0;
    for (const IssuePrediction& ip : preds.issues) {
        if (hit_within(ip, n)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(preds.issues.size());
}

double mrr(const PredictionSet& preds) {
    if (preds.issues.empty()) {
        throw ValidationError("mrr: empty prediction set");
    }
    double total = 0.0;
    for (const IssuePrediction& ip : preds.issues) {
        for (std::size_t i = 0; i < ip.ranking.size(); ++i) {
            if (ip.fixers.contains(ip.ranking[i])) {
                total += 1.0 / static_cast<double>(i + 1);
                break;
            }
        }
        // no correct developer anywhere: contributes 0
    }
    return total / static_cast<double>(preds.issues.size());
}

GroupSplit split_core_noncore(const std::map<std::string, std::size_t>& resolved_counts) {
    if (resolved_counts.empty()) {
        throw ValidationError("split_core_noncore: no resolved counts");
    }
    std::vector<std::pair<std::string, std::size_t>> devs(resolved_counts.begin(),
                                                          resolved_counts.end());
    std::sort(devs.begin(), devs.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::size_t total = 0;
    for (const auto& [id, c] : devs) total += c;

    GroupSplit split;
    std::size_t acc = 0;
    std::size_t i = 0;
    // shortest prefix with cumulative count >= half the total
    for (; i < devs.size(); ++i) {
        acc += devs[i].second;
        split.core.insert(devs[i].first);
        if (2 * acc >= total) {
            ++i;
            break;
        }
    }
    for (; i < devs.size(); ++i) split.non_core.insert(devs[i].first);
    return split;
}

GroupRecallResult group_recall(const PredictionSet& preds, const GroupSplit& split) {
    GroupRecallResult r;
    for (const IssuePrediction& ip : preds.issues) {
        bool owns_core = false, owns_non_core = false;
        for (const std::string& f : ip.fixers) {
            if (split.core.contains(f)) owns_core = true;
            if (split.non_core.contains(f)) owns_non_core = true;
        }
        if (owns_core) r.owned_core += 1;
        if (owns_non_core) r.owned_non_core += 1;
        if (ip.ranking.empty()) continue;
        const std::string& top1 = ip.ranking.front();
        const bool correct = ip.fixers.contains(top1);
        const bool top1_core = split.core.contains(top1);
        const bool top1_non_core = split.non_core.contains(top1);
        if (correct) {
            if (owns_core) r.t_core += 1;
            if (owns_non_core) r.t_non_core += 1;
        } else {
            if (top1_core && !owns_core) r.f_core += 1;
            if (top1_non_core && !owns_non_core) r.f_non_core += 1;
        }
    }
    if (r.owned_core > 0) {
        r.recall_core = static_cast<double>(r.t_core) / static_cast<double>(r.owned_core);
    }
    if (r.owned_non_core > 0) {
        r.recall_non_core =
            static_cast<double>(r.t_non_core) / static_cast<double>(r.owned_non_core);
    }
    return r;
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// mid-ranks of |d|, plus the tie-correction term sum(t^3 - t)
std::pair<std::vector<double>, double> midranks(const std::vector<double>& absd) {
    const std::size_t n = absd.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return absd[a] < absd[b]; });
    std::vector<double> ranks(n, 0.0);
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && absd[order[j]] == absd[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    return {ranks, tie_term};
}

// P(W+ <= w) under the signed-rank null, exact via DP over doubled ranks
double exact_cdf(const std::vector<double>& ranks, double w) {
    std::int64_t total2 = 0;
    std::vector<std::int64_t> r2(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        r2[i] = static_cast<std::int64_t>(std::llround(ranks[i] * 2.0));
        total2 += r2[i];
    }
    std::vector<double> dist(static_cast<std::size_t>(total2) + 1, 0.0);
    dist[0] = 1.0;
    std::int64_t reach = 0;
    for (std::int64_t r : r2) {
        reach += r;
        for (std::int64_t s = reach; s >= r; --s) {
            dist[static_cast<std::size_t>(s)] += dist[static_cast<std::size_t>(s - r)];
        }
    }
    const double denom = std::pow(2.0, static_cast<double>(ranks.size()));
    const auto w2 = static_cast<std::int64_t>(std::floor(w * 2.0 + 1e-9));
    double acc = 0.0;
    for (std::int64_t s = 0; s <= std::min(w2, total2); ++s) {
        acc += dist[static_cast<std::size_t>(s)];
    }
    return acc / denom;
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ValidationError("wilcoxon_signed_rank: length mismatch");
    }
    if (x.empty()) {
        throw ValidationError("wilcoxon_signed_rank: empty samples");
    }
    std::vector<double> d;
    d.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        if (diff != 0.0) d.push_back(diff);
    }
    WilcoxonResult res;
    res.n_effective = d.size();
    if (d.empty()) {
        res.degenerate = true;
        res.p_value = 1.0;
        res.exact = true;
        return res;
    }
    std::vector<double> absd(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) absd[i] = std::abs(d[i]);
    auto [ranks, tie_term] = midranks(absd);
    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] > 0.0) {
            w_plus += ranks[i];
        } else {
            w_minus += ranks[i];
        }
    }
    res.w = std::min(w_plus, w_minus);
    const double n = static_cast<double>(d.size());
    if (d.size() <= 25) {
        res.exact = true;
        // two-sided: P(W+ <= w) + P(W+ >= total - w) = 2 P(W+ <= w) by symmetry
        res.p_value = std::min(1.0, 2.0 * exact_cdf(ranks, res.w));
    } else {
        res.exact = false;
        const double mean = n * (n + 1.0) / 4.0;
        const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
        // continuity-corrected two-sided normal approximation
        const double z = (res.w - mean + 0.5) / std::sqrt(var);
        res.p_value = std::min(1.0, 2.0 * normal_cdf(z));
    }
    return res;
}

CliffsDelta cliffs_delta(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) {
        throw ValidationError("cliffs_delta: empty samples");
    }
    std::int64_t greater = 0, less = 0;
    for (double xi : x) {
        for (double yj : y) {
            if (xi > yj) {
                ++greater;
            } else if (xi < yj) {
                ++less;
            }
        }
    }
    CliffsDelta out;
    out.delta = static_cast<double>(greater - less) /
                (static_cast<double>(x.size()) * static_cast<double>(y.size()));
    const double mag = std::abs(out.delta);
    if (mag < 0.147) {
        out.magnitude = "negligible";
    } else if (mag < 0.33) {
        out.magnitude = "small";
    } else if (mag < 0.474) {
        out.magnitude = "medium";
    } else {
        out.magnitude = "large";
    }
    return out;
}

std::vector<std::string> frequency_baseline(
    const std::vector<std::pair<std::string, Timestamp>>& fixes, double half_life,
    Timestamp reference) {
    std::map<std::string, double> score;
    for (const auto& [dev, at] : fixes) {
        double w = 1.0;
        if (std::isfinite(half_life) && half_life > 0.0) {
            const double age = static_cast<double>(reference - at);
            w = std::exp2(-age / half_life);
        }
        score[dev] += w;
    }
    std::vector<std::pair<std::string, double>> ranked(score.begin(), score.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> out;
    out.reserve(ranked.size());
    for (const auto& [dev, s] : ranked) out.push_back(dev);
    return out;
}

ActivityTable activity_table(const corpus::Corpus& corpus,
                             const std::vector<Timestamp>& stage_boundaries) {
    if (stage_boundaries.size() < 2) {
        throw ValidationError("activity_table: need at least one stage");
    }
    for (std::size_t i = 1; i < stage_boundaries.size(); ++i) {
        if (stage_boundaries[i] <= stage_boundaries[i - 1]) {
            throw ValidationError("activity_table: boundaries must be strictly increasing");
        }
    }
    ActivityTable table;
    const std::size_t n_stages = stage_boundaries.size() - 1;
    for (std::size_t s = 0; s < n_stages; ++s) {
        table.stages.emplace_back(stage_boundaries[s], stage_boundaries[s + 1]);
    }
    table.stage_commits.assign(n_stages, 0);

    std::map<std::string, std::vector<std::size_t>> per_dev;
    for (const CommitRecord& c : corpus.commits()) {
        auto it = std::upper_bound(stage_boundaries.begin(), stage_boundaries.end(),
                                   c.committed_at);
        if (it == stage_boundaries.begin()) continue;  // before the first stage
        const std::size_t stage = static_cast<std::size_t>(it - stage_boundaries.begin()) - 1;
        if (stage >= n_stages) continue;  // at/after the last boundary
        auto& row = per_dev[c.author];
        if (row.empty()) row.assign(n_stages, 0);
        row[stage] += 1;
        table.stage_commits[stage] += 1;
    }
    for (const auto& [dev, counts] : per_dev) {
        table.developers.push_back(dev);
        std::vector<std::optional<double>> pct(n_stages);
        for (std::size_t s = 0; s < n_stages; ++s) {
            if (table.stage_commits[s] > 0) {
                pct[s] = 100.0 * static_cast<double>(counts[s]) /
                         static_cast<double>(table.stage_commits[s]);
            }
        }
        table.percentages.push_back(std::move(pct));
    }
    return table;
}

void write_activity_table(std::ostream& out, const ActivityTable& table) {
    out << "developer";
    for (std::size_t s = 0; s < table.stages.size(); ++s) out << "\tstage" << (s + 1);
    out << "\n";
    char buf[32];
    for (std::size_t i = 0; i < table.developers.size(); ++i) {
        out << table.developers[i];
        for (const auto& pct : table.percentages[i]) {
            if (pct) {
                std::snprintf(buf, sizeof(buf), "%.2f%%", *pct);
                out << '\t' << buf;
            } else {
                out << "\t-";
            }
        }
        out << "\n";
    }
}

std::vector<OverlapCell> prediction_overlap(
    const std::vector<std::pair<std::string, const PredictionSet*>>& systems) {
    if (systems.empty()) {
        throw ValidationError("prediction_overlap: no systems");
    }
    const std::size_t n_issues = systems.front().second->issues.size();
    for (const auto& [name, ps] : systems) {
        if (ps->issues.size() != n_issues) {
            throw ValidationError("prediction_overlap: prediction sets cover different issues");
        }
    }
    const std::size_t n_sys = systems.size();
    std::map<std::uint64_t, std::size_t> counts;
    for (std::size_t i = 0; i < n_issues; ++i) {
        std::uint64_t mask = 0;
        for (std::size_t s = 0; s < n_sys; ++s) {
            const IssuePrediction& ip = systems[s].second->issues[i];
            if (ip.issue_id != systems[0].second->issues[i].issue_id) {
                throw ValidationError("prediction_overlap: issue order differs between sets");
            }
            if (!ip.ranking.empty() && ip.fixers.contains(ip.ranking.front())) {
                mask |= (1ULL << s);
            }
        }
        if (mask != 0) counts[mask] += 1;
    }
    std::vector<OverlapCell> out;
    for (const auto& [mask, count] : counts) {
        OverlapCell cell;
        for (std::size_t s = 0; s < n_sys; ++s) {
            if (mask & (1ULL << s)) cell.systems.push_back(systems[s].first);
        }
        cell.count = count;
        out.push_back(std::move(cell));
    }
    return out;
}

}  // namespace devrec::evaluation
