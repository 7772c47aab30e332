// devrec: developer recommendation for issue trackers.
// Pipeline: synth/ingest -> relabel -> extract-relations -> build-graph ->
// train -> evaluate / recommend / sweep-window; stats reports corpus-level
// activity tables.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "devrec/corpus.hpp"
#include "devrec/evaluation.hpp"
#include "devrec/htg.hpp"
#include "devrec/pipeline.hpp"
#include "devrec/relations.hpp"
#include "devrec/synth.hpp"
#include "devrec/training.hpp"

namespace fs = std::filesystem;
using namespace devrec;

namespace {

std::ofstream open_out(const std::string& path) {
    if (auto dir = fs::path(path).parent_path(); !dir.empty()) {
        fs::create_directories(dir);
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    return f;
}

std::ifstream open_in(const std::string& path, const std::string& producer) {
    std::ifstream f(path);
    if (!f) {
        throw std::runtime_error("cannot open " + path + " (produce it with `devrec " +
                                 producer + "`)");
    }
    return f;
}

corpus::Corpus load_corpus_dir(const std::string& dir) {
    for (const char* name : {"issues", "comments", "events", "commits"}) {
        if (!fs::exists(fs::path(dir) / (std::string(name) + ".jsonl"))) {
            throw std::runtime_error("corpus dir " + dir + " is missing " + name +
                                     ".jsonl (produce it with `devrec ingest` or `devrec synth`)");
        }
    }
    return corpus::Corpus::load_dir(dir);
}

std::string hex64(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

model::ParamStore load_checkpoint(const std::string& path) {
    std::ifstream f = open_in(path, "train");
    return model::ParamStore::load(f);
}

struct SharedTrainFlags {
    pipeline::RunConfig run;
    std::uint64_t seed = 42;

    void bind(CLI::App* cmd) {
        cmd->add_option("--seed", seed, "master seed for init/negatives/dropout");
        cmd->add_option("--epochs", run.train.epochs, "max training epochs");
        cmd->add_option("--patience", run.train.patience, "early-stopping patience");
        cmd->add_option("--lr", run.train.lr, "learning rate");
        cmd->add_option("--weight-decay", run.train.weight_decay, "decoupled weight decay");
        cmd->add_option("--margin", run.train.margin, "hinge margin");
        cmd->add_option("--negatives", run.train.negatives, "negatives per positive");
        cmd->add_option("--dim", run.model.hidden_dim, "hidden embedding dimension");
        cmd->add_option("--layers", run.model.layers, "aggregation layers");
        cmd->add_option("--dropout", run.model.dropout, "dropout on relation messages");
    }

    void resolve() {
        run.model.seed = seed;
        run.train.seed = seed;
        run.model.negatives_per_positive = run.train.negatives;
    }
};

int cmd_synth(const synth::SynthSpec& spec, const std::string& out_dir) {
    synth::SynthCorpus sc = synth::generate_synthetic(spec);
    synth::write_record_streams(sc, out_dir);
    std::cout << "synth: " << sc.issues.size() << " issues, " << sc.comments.size()
              << " comments, " << sc.events.size() << " events, " << sc.commits.size()
              << " commits -> " << out_dir << "\n";
    return 0;
}

int cmd_ingest(const std::string& issues, const std::string& comments, const std::string& events,
               const std::string& commits, const std::string& out_dir) {
    std::ifstream fi = open_in(issues, "synth");
    std::ifstream fc = open_in(comments, "synth");
    std::ifstream fe = open_in(events, "synth");
    std::ifstream fm = open_in(commits, "synth");
    corpus::Corpus c = corpus::Corpus::load(fi, fc, fe, fm);
    c.save_dir(out_dir);
    const corpus::LoadReport& rep = c.report();
    std::cout << "ingest: " << rep.issue_count << " issues, " << rep.comment_count
              << " comments, " << rep.event_count << " events, " << rep.commit_count
              << " commits -> " << out_dir << "\n";
    for (const std::string& w : rep.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

int cmd_relabel(const std::string& corpus_dir, const std::string& out_path) {
    corpus::Corpus c = load_corpus_dir(corpus_dir);
    corpus::RelabelSummary summary;
    auto labeled = corpus::relabel_corpus(c, &summary);
    std::ofstream f = open_out(out_path);
    pipeline::write_labels_tsv(f, labeled);
    std::cout << "relabel: " << summary.closed_issues << " closed issues, " << summary.labeled
              << " labeled (" << summary.rule1 << " traced, " << summary.rule2
              << " via closer), " << summary.unlabeled << " unlabeled, " << summary.multi_fixer
              << " multi-fixer -> " << out_path << "\n";
    return 0;
}

int cmd_extract(const std::string& corpus_dir, std::size_t k, double tau,
                const std::string& out_path) {
    corpus::Corpus c = load_corpus_dir(corpus_dir);
    auto labeled = corpus::relabel_corpus(c);
    relations::ExtractOptions opts;
    opts.similar_k = k;
    opts.similar_tau = tau;
    auto edges = relations::extract_all(c, labeled, opts);
    std::ofstream f = open_out(out_path);
    relations::write_edges_tsv(f, edges);
    std::map<relations::RelationType, std::size_t> per_rel;
    for (const auto& e : edges) per_rel[e.relation] += 1;
    std::cout << "extract-relations: " << edges.size() << " edges (";
    bool first = true;
    for (const auto& [r, n] : per_rel) {
        std::cout << (first ? "" : ", ") << relations::to_string(r) << " " << n;
        first = false;
    }
    std::cout << ") -> " << out_path << "\n";
    return 0;
}

int cmd_build_graph(const std::string& edges_path, const std::string& labels_path,
                    std::size_t slices, const std::string& out_path) {
    std::ifstream fe = open_in(edges_path, "extract-relations");
    auto edges = relations::read_edges_tsv(fe);
    std::ifstream fl = open_in(labels_path, "relabel");
    pipeline::LabelRows labels = pipeline::read_labels_tsv(fl);
    htg::BuildStats stats;
    htg::Htg g = pipeline::build_graph(edges, labels, slices, &stats);
    std::ofstream f = open_out(out_path);
    g.save(f);
    std::cout << "build-graph: T=" << g.T() << ", structure hash "
              << hex64(g.structure_hash()) << ", late issue edges kept "
              << stats.late_comment_edges << ", dropped " << stats.dropped_closed_issue_edges
              << " -> " << out_path << "\n";
    return 0;
}

int cmd_train(const std::string& graph_path, SharedTrainFlags& flags, std::size_t tw,
              const std::string& out_dir) {
    flags.resolve();
    flags.run.model.tw = tw;
    std::ifstream f = open_in(graph_path, "build-graph");
    htg::Htg g = htg::Htg::load(f);
    htg::Split split = htg::chronological_split(g, flags.run.train_parts, flags.run.val_parts,
                                                flags.run.test_parts);
    training::TrainResult tr =
        training::train(g, split, flags.run.model, flags.run.train, &std::cout);
    fs::create_directories(out_dir);
    {
        std::ofstream best = open_out((fs::path(out_dir) / "best.ckpt").string());
        tr.best.save(best);
    }
    {
        std::ofstream hist = open_out((fs::path(out_dir) / "history.tsv").string());
        training::write_history_tsv(hist, tr.history);
    }
    std::cout << "train: best epoch " << tr.history.best_epoch << " (val loss "
              << tr.history.best_val_loss << ") -> " << out_dir << "/best.ckpt\n";
    return tr.history.aborted_nan ? 2 : 0;
}

int cmd_evaluate(const std::string& graph_path, const std::string& ckpt_path,
                 const std::string& topn_csv, const std::string& report_prefix,
                 double half_life_days, bool rankings, pipeline::RunConfig run) {
    std::ifstream f = open_in(graph_path, "build-graph");
    htg::Htg g = htg::Htg::load(f);
    model::ParamStore params = load_checkpoint(ckpt_path);
    htg::Split split = htg::chronological_split(g, run.train_parts, run.val_parts,
                                                run.test_parts);
    pipeline::EvalOptions opts;
    opts.topns.clear();
    std::istringstream ss(topn_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) opts.topns.push_back(std::stoul(tok));
    }
    opts.half_life_days = half_life_days;
    pipeline::EvalReport rep = pipeline::evaluate_checkpoint(g, split, params, opts);

    run.model = params.config();
    run.train.seed = params.config().seed;
    run.baseline_half_life_days = half_life_days;
    std::map<std::string, std::string> hashes;
    hashes["graph"] = hex64(pipeline::file_hash(graph_path));
    hashes["checkpoint"] = hex64(pipeline::file_hash(ckpt_path));

    std::ofstream out = open_out(report_prefix + ".report");
    pipeline::write_eval_report(out, rep, run.to_kv(), hashes, rankings);
    std::cout << "evaluate: " << rep.test_issues << " test issues";
    for (const auto& [n, v] : rep.topn) {
        std::cout << ", top" << n << " " << v;
    }
    std::cout << ", mrr " << rep.mrr_value << " -> " << report_prefix << ".report\n";
    return 0;
}

int cmd_recommend(const std::string& graph_path, const std::string& ckpt_path,
                  const std::string& issue_file, std::size_t top, std::size_t k, double tau) {
    std::ifstream fg = open_in(graph_path, "build-graph");
    htg::Htg g = htg::Htg::load(fg);
    model::ParamStore params = load_checkpoint(ckpt_path);
    const model::ModelConfig& mcfg = params.config();

    std::ifstream fi = open_in(issue_file, "(write an ad-hoc issue json)");
    nlohmann::json obj = nlohmann::json::parse(fi);
    IssueRecord issue;
    issue.issue_id = obj.value("issue_id", std::string("adhoc"));
    issue.title = obj.value("title", std::string());
    issue.body = obj.value("body", std::string());
    issue.reporter = obj.value("reporter", std::string());
    std::vector<std::string> commenters;
    if (obj.contains("commenters")) {
        for (const auto& c : obj["commenters"]) commenters.push_back(c.get<std::string>());
    }

    // final embeddings from the window ending at the last slice
    htg::WindowBatch batch;
    const std::size_t T = g.T();
    if (T < mcfg.tw + 1) throw ValidationError("recommend: graph too short for the window");
    for (std::size_t t = T - mcfg.tw; t < T; ++t) batch.input_slices.push_back(t);
    batch.target_slice = T;
    model::ForwardOptions fopts;
    model::ForwardResult fr = model::forward_window(g, batch, params, fopts);
    const autograd::DenseMatrix& dev_mat = fr.tape.value(fr.dev_final);
    const autograd::DenseMatrix& file_mat = fr.tape.value(fr.file_final);
    const model::NodeUniverse& uni = params.universe();
    const std::size_t d = mcfg.hidden_dim;

    auto dev_emb = [&](const std::string& id) -> std::optional<std::vector<double>> {
        auto it = uni.dev_index.find(id);
        if (it == uni.dev_index.end()) return std::nullopt;
        const double* p = dev_mat.data() + it->second * d;
        return std::vector<double>(p, p + d);
    };

    std::vector<std::vector<double>> report_neigh, comment_neigh;
    if (!issue.reporter.empty()) {
        if (auto e = dev_emb(issue.reporter)) {
            report_neigh.push_back(std::move(*e));
        } else {
            std::cout << "warning: reporter '" << issue.reporter << "' unknown, ignored\n";
        }
    }
    for (const std::string& c : commenters) {
        if (auto e = dev_emb(c)) {
            comment_neigh.push_back(std::move(*e));
        } else {
            std::cout << "warning: commenter '" << c << "' unknown, ignored\n";
        }
    }

    std::vector<std::pair<std::string, std::string>> docs;
    docs.reserve(uni.files.size());
    for (const std::string& p : uni.files) docs.emplace_back(p, p);
    relations::TfidfIndex index = relations::TfidfIndex::build(docs);
    std::vector<std::pair<std::vector<double>, double>> similar_neigh;
    for (const auto& [file, cos] : index.top_k(issue.title + " " + issue.body, k, tau)) {
        const double* p = file_mat.data() + uni.file_index.at(file) * d;
        similar_neigh.emplace_back(std::vector<double>(p, p + d), cos);
    }

    auto init = model::initial_issue_embedding(issue.issue_id, mcfg.seed, d);
    auto emb = model::embed_issue_single(init, report_neigh, comment_neigh, similar_neigh,
                                         params);

    htg::Split split = htg::chronological_split(g);
    std::vector<std::string> candidates = model::candidate_pool(g, split);
    std::vector<std::pair<std::string, std::span<const double>>> cand_embs;
    std::vector<std::vector<double>> keep;
    keep.reserve(candidates.size());
    for (const std::string& c : candidates) {
        const double* p = dev_mat.data() + uni.dev_index.at(c) * d;
        keep.emplace_back(p, p + d);
        cand_embs.emplace_back(c, std::span<const double>(keep.back()));
    }
    auto ranked = model::recommend(emb, cand_embs, top);
    std::cout << "rank\tdeveloper\tscore\n";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.6f", ranked[i].second);
        std::cout << (i + 1) << '\t' << ranked[i].first << '\t' << buf << "\n";
    }
    return 0;
}

int cmd_sweep(const std::string& graph_path, SharedTrainFlags& flags,
              const std::string& tw_csv, const std::string& out_path) {
    flags.resolve();
    std::ifstream f = open_in(graph_path, "build-graph");
    htg::Htg g = htg::Htg::load(f);
    htg::Split split = htg::chronological_split(g, flags.run.train_parts, flags.run.val_parts,
                                                flags.run.test_parts);
    std::vector<std::size_t> tws;
    std::istringstream ss(tw_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) tws.push_back(std::stoul(tok));
    }
    auto rows = pipeline::sweep_window(g, split, flags.run.model, flags.run.train, tws,
                                       &std::cout);
    pipeline::write_sweep_table(std::cout, rows);
    if (!out_path.empty()) {
        std::ofstream out = open_out(out_path);
        pipeline::write_sweep_table(out, rows);
    }
    return 0;
}

int cmd_stats(const std::string& corpus_dir, std::size_t stages, const std::string& out_path) {
    corpus::Corpus c = load_corpus_dir(corpus_dir);
    corpus::RelabelSummary summary;
    auto labeled = corpus::relabel_corpus(c, &summary);
    corpus::DeveloperStats stats = corpus::developer_stats(c);

    std::ostringstream out;
    out << "[corpus]\n";
    out << "issues = " << c.issue_count() << "\n";
    out << "comments = " << c.comments().size() << "\n";
    out << "events = " << c.events().size() << "\n";
    out << "commits = " << c.commit_count() << "\n";
    out << "[relabel]\n";
    out << "closed = " << summary.closed_issues << "\n";
    out << "labeled = " << summary.labeled << "\n";
    out << "unlabeled = " << summary.unlabeled << "\n";
    out << "multi_fixer = " << summary.multi_fixer << "\n";
    out << "rule1_traced = " << summary.rule1 << "\n";
    out << "rule2_closer = " << summary.rule2 << "\n";
    out << "[developers]\n";
    for (const auto& [dev, ds] : stats) {
        out << dev << " = commits " << ds.commit_count << ", closed " << ds.closed_issue_count
            << "\n";
    }
    if (!c.commits().empty() && stages > 0) {
        Timestamp lo = c.commits().front().committed_at, hi = lo;
        for (const auto& cm : c.commits()) {
            lo = std::min(lo, cm.committed_at);
            hi = std::max(hi, cm.committed_at);
        }
        std::vector<Timestamp> bounds;
        for (std::size_t s = 0; s <= stages; ++s) {
            bounds.push_back(lo + static_cast<Timestamp>(
                                      (static_cast<double>(hi - lo + 1) * s) / stages));
        }
        out << "[activity]\n";
        evaluation::ActivityTable table = evaluation::activity_table(c, bounds);
        evaluation::write_activity_table(out, table);
    }
    if (out_path.empty()) {
        std::cout << out.str();
    } else {
        std::ofstream f = open_out(out_path);
        f << out.str();
        std::cout << "stats -> " << out_path << "\n";
    }
    return 0;
}

int cmd_paired_test(const std::string& a_path, const std::string& b_path) {
    auto read_vec = [](const std::string& p) {
        std::ifstream f(p);
        if (!f) throw std::runtime_error("cannot open " + p);
        std::vector<double> v;
        double x;
        while (f >> x) v.push_back(x);
        return v;
    };
    std::vector<double> a = read_vec(a_path), b = read_vec(b_path);
    auto w = evaluation::wilcoxon_signed_rank(a, b);
    auto cd = evaluation::cliffs_delta(a, b);
    std::cout << "wilcoxon_w = " << w.w << "\nwilcoxon_p = " << w.p_value
              << "\nwilcoxon_exact = " << (w.exact ? "yes" : "no")
              << "\nwilcoxon_degenerate = " << (w.degenerate ? "yes" : "no")
              << "\ncliffs_delta = " << cd.delta << "\ncliffs_magnitude = " << cd.magnitude
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"developer recommendation over issue/developer/file temporal graphs"};
    app.require_subcommand(1);
    if (const char* cfg = std::getenv("DEVREC_CONFIG")) {
        app.set_config("--config", cfg, "flat key=value config file");
    } else {
        app.set_config("--config", "", "flat key=value config file");
    }

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a deterministic synthetic corpus");
    synth::SynthSpec spec;
    std::string synth_out;
    synth_cmd->add_option("--modules", spec.modules, "module count");
    synth_cmd->add_option("--devs-per-module", spec.devs_per_module, "developers per module");
    synth_cmd->add_option("--issues", spec.issues, "issue count");
    synth_cmd->add_option("--files-per-module", spec.files_per_module, "files per module");
    synth_cmd->add_option("--vocab-per-module", spec.vocab_per_module, "tokens per module");
    synth_cmd->add_option("--drift-slice", spec.drift_slice,
                          "retire each module's primary developer at this slice (0 = off)");
    synth_cmd->add_option("--fixer-comment-prob", spec.fixer_comment_prob,
                          "probability the fixer comments");
    synth_cmd->add_option("--drive-by-prob", spec.drive_by_prob,
                          "probability of cross-module commenters");
    synth_cmd->add_option("--reporter-fixer-prob", spec.reporter_is_fixer_prob,
                          "probability the reporter is the fixer");
    synth_cmd->add_option("--seed", spec.seed, "generator seed");
    synth_cmd->add_option("--out", synth_out, "output corpus directory")->required();

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "load, validate and normalize record streams");
    std::string in_issues, in_comments, in_events, in_commits, ingest_out;
    ingest_cmd->add_option("--issues", in_issues)->required();
    ingest_cmd->add_option("--comments", in_comments)->required();
    ingest_cmd->add_option("--events", in_events)->required();
    ingest_cmd->add_option("--commits", in_commits)->required();
    ingest_cmd->add_option("--out", ingest_out, "normalized corpus directory")->required();

    // relabel
    auto* relabel_cmd = app.add_subcommand("relabel", "trace fixers for closed issues");
    std::string relabel_corpus, relabel_out = "labels.tsv";
    relabel_cmd->add_option("--corpus", relabel_corpus)->required();
    relabel_cmd->add_option("--out", relabel_out, "labels tsv path");

    // extract-relations
    auto* extract_cmd = app.add_subcommand("extract-relations",
                                           "extract the five typed edge sets");
    std::string extract_corpus, extract_out = "edges.tsv";
    std::size_t extract_k = 3;
    double extract_tau = 0.05;
    extract_cmd->add_option("--corpus", extract_corpus)->required();
    extract_cmd->add_option("--k", extract_k, "textual-similar edges per issue");
    extract_cmd->add_option("--tau", extract_tau, "cosine threshold");
    extract_cmd->add_option("--out", extract_out, "edges tsv path");

    // build-graph
    auto* build_cmd = app.add_subcommand("build-graph", "slice the timeline and build snapshots");
    std::string build_edges = "edges.tsv", build_labels = "labels.tsv",
                build_out = "graph.htg";
    std::size_t build_slices = 10;
    build_cmd->add_option("--edges", build_edges);
    build_cmd->add_option("--labels", build_labels);
    build_cmd->add_option("--slices", build_slices, "time slices");
    build_cmd->add_option("--out", build_out, "graph path");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model on a built graph");
    std::string train_graph = "graph.htg", train_out = "ckpt";
    std::size_t train_tw = 2;
    SharedTrainFlags train_flags;
    train_cmd->add_option("--graph", train_graph);
    train_cmd->add_option("--tw", train_tw, "time window size (1..7)");
    train_cmd->add_option("--out", train_out, "checkpoint directory");
    train_flags.bind(train_cmd);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "metric/group/statistics report");
    std::string eval_graph = "graph.htg", eval_ckpt = "ckpt/best.ckpt", eval_topn = "1,3,5",
                eval_report = "eval";
    double eval_half_life = 90.0;
    bool eval_rankings = false;
    std::string paired_a, paired_b;
    eval_cmd->add_option("--graph", eval_graph);
    eval_cmd->add_option("--ckpt", eval_ckpt);
    eval_cmd->add_option("--topn", eval_topn, "comma-separated N values");
    eval_cmd->add_option("--report", eval_report, "report path prefix");
    eval_cmd->add_option("--half-life-days", eval_half_life, "baseline recency half-life");
    eval_cmd->add_flag("--rankings", eval_rankings, "include per-issue ranked lists");
    eval_cmd->add_option("--paired-a", paired_a, "run the paired tests on this vector file");
    eval_cmd->add_option("--paired-b", paired_b, "second paired vector file");

    // recommend
    auto* rec_cmd = app.add_subcommand("recommend", "rank developers for an ad-hoc issue");
    std::string rec_graph = "graph.htg", rec_ckpt = "ckpt/best.ckpt", rec_issue;
    std::size_t rec_top = 5, rec_k = 3;
    double rec_tau = 0.05;
    rec_cmd->add_option("--graph", rec_graph);
    rec_cmd->add_option("--ckpt", rec_ckpt);
    rec_cmd->add_option("--issue-file", rec_issue, "json with title/body/reporter/commenters")
        ->required();
    rec_cmd->add_option("--top", rec_top, "list length");
    rec_cmd->add_option("--k", rec_k, "textual-similar neighbors");
    rec_cmd->add_option("--tau", rec_tau, "cosine threshold");

    // sweep-window
    auto* sweep_cmd = app.add_subcommand("sweep-window", "train tw=1..7 and tabulate metrics");
    std::string sweep_graph = "graph.htg", sweep_tws = "1,2,3,4,5,6,7", sweep_out;
    SharedTrainFlags sweep_flags;
    sweep_cmd->add_option("--graph", sweep_graph);
    sweep_cmd->add_option("--tw-set", sweep_tws, "comma-separated window sizes");
    sweep_cmd->add_option("--out", sweep_out, "table output path");
    sweep_flags.bind(sweep_cmd);

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "corpus, relabeling and activity statistics");
    std::string stats_corpus, stats_out;
    std::size_t stats_stages = 4;
    stats_cmd->add_option("--corpus", stats_corpus)->required();
    stats_cmd->add_option("--stages", stats_stages, "activity stages");
    stats_cmd->add_option("--out", stats_out, "write the report here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) return cmd_synth(spec, synth_out);
        if (ingest_cmd->parsed()) {
            return cmd_ingest(in_issues, in_comments, in_events, in_commits, ingest_out);
        }
        if (relabel_cmd->parsed()) return cmd_relabel(relabel_corpus, relabel_out);
        if (extract_cmd->parsed()) {
            return cmd_extract(extract_corpus, extract_k, extract_tau, extract_out);
        }
        if (build_cmd->parsed()) {
            return cmd_build_graph(build_edges, build_labels, build_slices, build_out);
        }
        if (train_cmd->parsed()) {
            return cmd_train(train_graph, train_flags, train_tw, train_out);
        }
        if (eval_cmd->parsed()) {
            if (!paired_a.empty() || !paired_b.empty()) {
                if (paired_a.empty() || paired_b.empty()) {
                    throw std::runtime_error("--paired-a and --paired-b go together");
                }
                return cmd_paired_test(paired_a, paired_b);
            }
            return cmd_evaluate(eval_graph, eval_ckpt, eval_topn, eval_report, eval_half_life,
                                eval_rankings, pipeline::RunConfig{});
        }
        if (rec_cmd->parsed()) {
            return cmd_recommend(rec_graph, rec_ckpt, rec_issue, rec_top, rec_k, rec_tau);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(sweep_graph, sweep_flags, sweep_tws, sweep_out);
        }
        if (stats_cmd->parsed()) return cmd_stats(stats_corpus, stats_stages, stats_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
