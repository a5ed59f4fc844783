#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"
#include "popdyn/equilibrium.hpp"
#include "popdyn/io.hpp"
#include "popdyn/kmin.hpp"
#include "popdyn/quality.hpp"
#include "popdyn/simulator.hpp"
#include "popdyn/winprob.hpp"

namespace popdyn::cli {

using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string join(const std::vector<int>& v, char sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += std::to_string(v[i]);
    }
    return s;
}

// Options shared by every command.
struct Common {
    std::string config;
    int n = 0;
    int k = 0;
    std::string k_dist;
    std::string alpha = "";
    std::string mode;
    double fm = 0;
    std::string classes;
    std::string out;
    std::string format = "csv";
    std::uint64_t seed = 0;
    int threads = 0;

    CLI::Option* n_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* fm_opt = nullptr;

    void add_to(CLI::App* app, bool with_n = true) {
        app->add_option("--config", config, "MarketConfig JSON file (flags override it)");
        if (with_n) n_opt = app->add_option("--n", n, "number of items N");
        k_opt = app->add_option("--k", k, "discrimination K");
        app->add_option("--k-dist", k_dist, "JSON file with the K law (array of p_k or {\"k\": p})");
        app->add_option("--alpha", alpha, "popularity exponent (value, list or a:b:step where sweeps apply)");
        app->add_option("--mode", mode, "with-rep | without-rep");
        fm_opt = app->add_option("--fm", fm, "naive user fraction");
        app->add_option("--classes", classes, "JSON file with user classes");
        app->add_option("--out", out, "output file (default stdout)");
        app->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
        app->add_option("--seed", seed, "master seed");
        app->add_option("--threads", threads, "OpenMP threads (0 = default)");
    }

    /// Config document from --config plus flag overrides.
    json config_json(bool need_k = true) const {
        json j = config.empty() ? json::object() : read_json_file(config);
        if (n_opt && n_opt->count()) j["n_items"] = n;
        if (!j.contains("n_items")) throw UsageError("missing --n");
        if (k_opt->count()) j["discrimination"] = k;
        if (!k_dist.empty()) j["discrimination"] = read_json_file(k_dist);
        if (need_k && !j.contains("discrimination")) throw UsageError("missing --k or --k-dist");
        if (!mode.empty()) j["repetition_mode"] = to_string(parse_repetition_mode(mode));
        if (fm_opt->count()) j["naive_fraction"] = fm;
        if (!classes.empty()) {
            json c = json::array();
            for (const auto& uc : classes_from_json(read_json_file(classes))) {
                c.push_back({{"class_probability", uc.probability}, {"quality_order", uc.quality_order}});
            }
            j["classes"] = c;
        }
        return j;
    }

    MarketConfig build(double alpha_value, bool need_k = true) const {
        json j = config_json(need_k);
        j["alpha"] = alpha_value;
        return config_from_json(j);
    }

    std::vector<double> alphas(const std::string& fallback) const {
        if (!alpha.empty()) return parse_real_list(alpha);
        if (!config.empty()) {
            const json j = read_json_file(config);
            if (j.contains("alpha")) return {j.at("alpha").get<double>()};
        }
        if (fallback.empty()) throw UsageError("missing --alpha");
        return parse_real_list(fallback);
    }

    double single_alpha() const {
        const auto a = alphas("");
        if (a.size() != 1) throw UsageError("--alpha takes a single value here");
        return a.front();
    }

    void apply_threads() const {
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#endif
    }
};

class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw Error("io_error", "cannot write " + path);
            out_ = &file_;
        }
    }
    std::ostream& stream() { return *out_; }

private:
    std::ofstream file_;
    std::ostream* out_;
};

Permutation parse_perm(const std::string& text, int n) {
    if (text.empty()) return Permutation::identity(n);
    std::vector<int> ids;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) ids.push_back(std::stoi(tok));
    if (static_cast<int>(ids.size()) != n) throw UsageError("--perm must list " + std::to_string(n) + " ids");
    try {
        return Permutation(ids);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

// ---- winprob ---------------------------------------------------------------

int cmd_winprob(const Common& c, const std::string& perm_text, std::ostream& out) {
    const auto cfg = c.build(c.single_alpha());
    const auto perm = parse_perm(perm_text, cfg.n_items);
    const auto b = win_probs(perm, cfg);
    Sink sink(c.out, out);
    auto& os = sink.stream();
    if (c.format == "json") {
        os << json{{"config", to_json(cfg)}, {"permutation", perm.order()}, {"b", b.probs}, {"q_bar", avg_quality(b)}}.dump(2)
           << '\n';
        return 0;
    }
    os << "item_id,b\n";
    for (int i = 1; i <= cfg.n_items; ++i) os << i << ',' << num(b[i]) << '\n';
    return 0;
}

// ---- equilibria ------------------------------------------------------------

struct EqOpts {
    std::string strategy = "exhaustive";
    int level = 0;
    std::uint64_t trials = 1000;
    int cap = kDefaultExhaustiveCap;
    bool attractiveness = false;
    std::string edges;
};

int cmd_equilibria(const Common& c, const EqOpts& o, std::ostream& out) {
    const auto cfg = c.build(c.single_alpha());
    SearchStrategy s;
    if (o.strategy == "exhaustive") {
        s = SearchStrategy::exhaustive();
    } else if (o.strategy == "pruned") {
        s = SearchStrategy::pruned(o.level);
    } else if (o.strategy == "randomized") {
        s = SearchStrategy::randomized(o.trials, c.seed);
    } else {
        throw UsageError("unknown strategy '" + o.strategy + "'");
    }
    auto set = enumerate_stable_points(cfg, s, o.cap);

    std::optional<double> overall;
    if (o.attractiveness || !o.edges.empty()) {
        const auto g = build_permutation_graph(cfg, o.cap);
        for (auto& p : set.points) p.attractiveness = attractiveness(g, p.perm);
        if (o.attractiveness) overall = overall_quality_multiclass(fixed_points_with_attractiveness(g, cfg), cfg);
        if (!o.edges.empty()) {
            std::ofstream ef(o.edges);
            if (!ef) throw Error("io_error", "cannot write " + o.edges);
            ef << edge_list_text(g);
        }
    }

    Sink sink(c.out, out);
    auto& os = sink.stream();
    if (c.format == "json") {
        json j = to_json(set);
        j["config"] = to_json(cfg);
        for (std::size_t i = 0; i < set.points.size(); ++i) j["points"][i]["q_bar"] = average_quality(set.points[i].perm, cfg);
        if (overall) j["overall_quality"] = *overall;
        os << j.dump(2) << '\n';
        return 0;
    }
    os << "permutation,q_bar,attractiveness";
    for (int i = 1; i <= cfg.n_items; ++i) os << ",b_" << i;
    os << '\n';
    for (const auto& p : set.points) {
        os << join(p.perm.order(), ' ') << ',' << num(average_quality(p.perm, cfg)) << ','
           << (p.attractiveness ? num(*p.attractiveness) : std::string());
        for (double x : p.b.probs) os << ',' << num(x);
        os << '\n';
    }
    return 0;
}

// ---- kmin ------------------------------------------------------------------

struct KminOpts {
    std::string n_list;
    std::string method;
    bool full_scan = false;
};

int cmd_kmin(const Common& c, const KminOpts& o, std::ostream& out) {
    if (o.n_list.empty() && c.config.empty()) throw UsageError("missing --n");
    std::vector<int> ns;
    if (!o.n_list.empty()) {
        ns = parse_int_list(o.n_list);
    } else {
        ns = {read_json_file(c.config).at("n_items").get<int>()};
    }
    const auto alphas = c.alphas("");
    const RepetitionMode mode = c.mode.empty() ? RepetitionMode::WithRepetition : parse_repetition_mode(c.mode);
    std::string method = o.method;
    if (method.empty()) method = mode == RepetitionMode::WithRepetition ? "closed" : "approx";
    if (method != "closed" && method != "approx" && method != "exact" && method != "limit") {
        throw UsageError("unknown method '" + method + "'");
    }
    if (!(c.fm >= 0 && c.fm <= 1)) throw UsageError("--fm must lie in [0,1]");
    std::optional<KDistribution> dist;
    if (!c.k_dist.empty()) dist = k_distribution_from_json(read_json_file(c.k_dist));

    Sink sink(c.out, out);
    auto& os = sink.stream();
    json rows = json::array();
    if (c.format == "csv") os << (dist ? "n,alpha,condition_met\n" : "n,alpha,mode,method,fm,k_min\n");
    for (int n : ns) {
        for (double a : alphas) {
            if (dist) {
                const bool met = kdist_condition(n, a, *dist);
                if (c.format == "csv") {
                    os << n << ',' << num(a) << ',' << (met ? "true" : "false") << '\n';
                } else {
                    rows.push_back({{"n", n}, {"alpha", a}, {"condition_met", met}});
                }
                continue;
            }
            KminQuery q{n, a, mode, c.fm, std::nullopt};
            std::optional<long long> k;
            if (c.fm > 0) {
                k = kmin_with_naive(q);
            } else if (method == "closed") {
                k = kmin_with_rep(n, a);
            } else if (method == "approx") {
                k = kmin_without_rep_approx(n, a);
            } else if (method == "limit") {
                k = kmin_with_rep_limit(a);
            } else {
                k = kmin_exact_enumeration(q, 30, o.full_scan);
            }
            if (c.format == "csv") {
                os << n << ',' << num(a) << ',' << to_string(mode) << ',' << method << ',' << num(c.fm) << ','
                   << (k ? std::to_string(*k) : "none") << '\n';
            } else {
                rows.push_back({{"n", n},
                                {"alpha", a},
                                {"mode", to_string(mode)},
                                {"method", method},
                                {"fm", c.fm},
                                {"k_min", k ? json(*k) : json(nullptr)}});
            }
        }
    }
    if (c.format == "json") os << rows.dump(2) << '\n';
    return 0;
}

// ---- optimize --------------------------------------------------------------

struct OptOpts {
    double beta = -1;
    std::string metric = "all";
    double range_hi = 10.0;
};

int cmd_optimize(const Common& c, const OptOpts& o, std::ostream& out) {
    if (!(o.beta >= 0)) throw UsageError("--beta must be non-negative");
    const auto grid = c.alphas("0:3:0.05");
    auto cfg = c.build(grid.front());
    const auto target = target_distribution(cfg.n_items, o.beta);
    const auto rows = alpha_sweep(cfg, target, grid);

    // alpha* for the quality target; an unreachable target maps to the nearer end
    json quality;
    quality["target_quality"] = target.target_quality;
    try {
        quality["alpha_star"] = optimize_alpha_for_quality(cfg, target.target_quality, {0.0, o.range_hi});
        quality["reachable"] = true;
    } catch (const Error& e) {
        if (e.code() != "target_out_of_range") throw;
        const bool below = target.target_quality < natural_quality(cfg, 0.0);
        quality["alpha_star"] = below ? 0.0 : o.range_hi;
        quality["reachable"] = false;
    }

    std::vector<Metric> metrics;
    if (o.metric == "all") {
        metrics = {Metric::Hellinger, Metric::RelativeEntropy, Metric::Bhattacharyya};
    } else {
        try {
            metrics = {parse_metric(o.metric)};
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    }
    json minima = json::object();
    for (auto m : metrics) {
        const auto best = optimize_alpha_for_distance(cfg, target, m, grid);
        minima[to_string(m)] = {{"alpha_star", best.alpha}, {"value", best.value}};
    }

    Sink sink(c.out, out);
    auto& os = sink.stream();
    if (c.format == "json") {
        json j;
        j["config"] = to_json(cfg);
        j["beta"] = o.beta;
        j["quality"] = quality;
        j["distance_minima"] = minima;
        j["rows"] = json::array();
        for (const auto& r : rows) {
            j["rows"].push_back({{"alpha", r.alpha},
                                 {"q_bar", r.q_bar},
                                 {"delta_q", r.delta_q},
                                 {"hellinger", r.hellinger},
                                 {"rel_entropy", std::isfinite(r.rel_entropy) ? json(r.rel_entropy) : json(nullptr)},
                                 {"bhattacharyya", r.bhattacharyya}});
        }
        os << j.dump(2) << '\n';
        return 0;
    }
    os << "alpha,q_bar,delta_q,hellinger,rel_entropy,bhattacharyya\n";
    for (const auto& r : rows) {
        os << num(r.alpha) << ',' << num(r.q_bar) << ',' << num(r.delta_q) << ',' << num(r.hellinger) << ','
           << (std::isfinite(r.rel_entropy) ? num(r.rel_entropy) : "inf") << ',' << num(r.bhattacharyya) << '\n';
    }
    return 0;
}

// ---- simulate --------------------------------------------------------------

struct SimOpts {
    std::string task = "trace";
    std::uint64_t rounds = 0;
    std::uint64_t runs = 1;
    std::string checkpoints = "log";
    std::string stable_strategy = "randomized";
    std::uint64_t trials = 200;
    int leader = 0;
};

std::vector<Permutation> stable_for(const MarketConfig& cfg, const SimOpts& o, std::uint64_t seed) {
    SearchStrategy s;
    if (o.stable_strategy == "exhaustive") {
        s = SearchStrategy::exhaustive();
    } else if (o.stable_strategy == "pruned") {
        s = SearchStrategy::pruned();
    } else if (o.stable_strategy == "randomized") {
        s = SearchStrategy::randomized(o.trials, seed);
    } else {
        throw UsageError("unknown stable strategy '" + o.stable_strategy + "'");
    }
    return enumerate_stable_points(cfg, s).permutations();
}

int cmd_simulate(const Common& c, const SimOpts& o, std::ostream& out) {
    if (o.rounds < 1) throw UsageError("--rounds must be at least 1");
    if (o.runs < 1) throw UsageError("--runs must be at least 1");

    if (o.task == "naive") {
        const auto j = c.config_json();
        const int n = j.at("n_items").get<int>();
        const int k = j.at("discrimination").get<int>();
        const auto res = naive_disruption_check(n, k, c.fm, o.rounds, o.runs, c.seed,
                                                o.leader > 0 ? std::optional<int>(o.leader) : std::nullopt);
        Sink sink(c.out, out);
        auto& os = sink.stream();
        if (c.format == "json") {
            json r = to_json(res.stats);
            r["threshold"] = res.threshold;
            r["fm"] = c.fm;
            os << r.dump(2) << '\n';
        } else {
            os << "n,k,fm,threshold,runs,top_not_best_frequency\n"
               << n << ',' << k << ',' << num(c.fm) << ',' << num(res.threshold) << ',' << o.runs << ','
               << num(res.stats.top_not_best_frequency) << '\n';
        }
        return 0;
    }

    if (o.task == "time-to-stable") {
        const auto alphas = c.alphas("");
        Sink sink(c.out, out);
        auto& os = sink.stream();
        json all = json::array();
        if (c.format == "csv") os << "alpha,runs,rounds,stable_points,median_hit_round,not_converged\n";
        for (double a : alphas) {
            const auto cfg = c.build(a);
            const auto stable = stable_for(cfg, o, c.seed);
            const auto st = time_to_stable_point(cfg, o.runs, o.rounds, c.seed, stable);
            if (c.format == "csv") {
                os << num(a) << ',' << o.runs << ',' << o.rounds << ',' << stable.size() << ','
                   << (st.median_hit_round ? num(*st.median_hit_round) : "none") << ',' << st.not_converged << '\n';
            } else {
                json r = to_json(st);
                r["alpha"] = a;
                r["stable_points"] = json::array();
                for (const auto& p : stable) r["stable_points"].push_back(p.order());
                all.push_back(std::move(r));
            }
        }
        if (c.format == "json") os << all.dump(2) << '\n';
        return 0;
    }

    const auto cfg = c.build(c.single_alpha());
    Sink sink(c.out, out);
    auto& os = sink.stream();
    if (o.task == "frequencies") {
        const auto st = estimate_win_frequencies(cfg, o.rounds, o.runs, c.seed);
        if (c.format == "json") {
            os << to_json(st).dump(2) << '\n';
        } else {
            os << "item_id,frequency,se\n";
            for (int i = 0; i < cfg.n_items; ++i) {
                os << (i + 1) << ',' << num(st.win_frequency[static_cast<std::size_t>(i)]) << ','
                   << num(st.win_frequency_se[static_cast<std::size_t>(i)]) << '\n';
            }
        }
        return 0;
    }
    if (o.task != "trace") throw UsageError("unknown task '" + o.task + "'");
    CheckpointSchedule sched;
    if (o.checkpoints == "log") {
        sched = CheckpointSchedule::log125(o.rounds);
    } else if (o.checkpoints == "final") {
        sched = CheckpointSchedule::final_only(o.rounds);
    } else {
        throw UsageError("--checkpoints must be log or final");
    }
    const auto trace = simulate_run(cfg, o.rounds, c.seed, sched);
    if (c.format == "json") {
        json j;
        j["config"] = to_json(cfg);
        j["seed"] = trace.seed;
        j["final_permutation"] = trace.final_permutation.order();
        j["checkpoints"] = json::array();
        for (const auto& cp : trace.checkpoints) {
            j["checkpoints"].push_back({{"round", cp.round}, {"weights", cp.weights}, {"normalized", cp.normalized}});
        }
        os << j.dump(2) << '\n';
    } else {
        write_trace_csv(trace, os);
    }
    return 0;
}

void print_error(std::ostream& err, const std::string& code, const std::string& message) {
    err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    try {
        if (text.find(':') != std::string::npos) {
            std::vector<double> parts;
            std::stringstream ss(text);
            std::string tok;
            while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
            if (parts.size() < 2 || parts.size() > 3) throw UsageError("range must be a:b or a:b:step");
            const double step = parts.size() == 3 ? parts[2] : 1.0;
            if (!(step > 0) || parts[1] < parts[0]) throw UsageError("range needs a <= b and step > 0");
            const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / step + 1e-9));
            for (long i = 0; i <= count; ++i) out.push_back(parts[0] + static_cast<double>(i) * step);
            return out;
        }
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    } catch (const std::invalid_argument&) {
        throw UsageError("not a number list: '" + text + "'");
    } catch (const std::out_of_range&) {
        throw UsageError("number out of range in '" + text + "'");
    }
    if (out.empty()) throw UsageError("empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (double x : parse_real_list(text)) {
        if (x != std::floor(x)) throw UsageError("expected integers in '" + text + "'");
        out.push_back(static_cast<int>(x));
    }
    return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"popdyn: popularity-biased market equilibria, K_min, alpha optimisation and urn simulation"};
    app.require_subcommand(1);

    Common c_win, c_eq, c_kmin, c_opt, c_sim;
    std::string perm_text;
    auto* win = app.add_subcommand("winprob", "winning probabilities for one popularity order");
    c_win.add_to(win);
    win->add_option("--perm", perm_text, "popularity order, ids by increasing popularity (default natural)");

    EqOpts eo;
    auto* eq = app.add_subcommand("equilibria", "stable permutations");
    c_eq.add_to(eq);
    eq->add_option("--strategy", eo.strategy, "exhaustive | pruned | randomized");
    eq->add_option("--level", eo.level, "pruned level M (0 = grow until nothing new)");
    eq->add_option("--trials", eo.trials, "randomized trials");
    eq->add_option("--cap", eo.cap, "largest N for exhaustive scans");
    eq->add_flag("--attractiveness", eo.attractiveness, "build the permutation graph and report attractiveness");
    eq->add_option("--edges", eo.edges, "write the permutation graph edge list here");

    KminOpts ko;
    auto* km = app.add_subcommand("kmin", "K_min sweep");
    c_kmin.add_to(km, false);
    km->add_option("--n", ko.n_list, "N, list or range");
    km->add_option("--method", ko.method, "closed | approx | exact | limit");
    km->add_flag("--full-scan", ko.full_scan, "exact method: enumerate all stable points");

    OptOpts oo;
    auto* opt = app.add_subcommand("optimize", "alpha sweep against a beta-law target");
    c_opt.add_to(opt);
    opt->add_option("--beta", oo.beta, "target exponent beta")->required();
    opt->add_option("--metric", oo.metric, "all | hellinger | relative_entropy | bhattacharyya");
    opt->add_option("--alpha-max", oo.range_hi, "upper end of the quality bisection range");

    SimOpts so;
    auto* sim = app.add_subcommand("simulate", "urn Monte Carlo");
    c_sim.add_to(sim);
    sim->add_option("--task", so.task, "trace | frequencies | time-to-stable | naive");
    sim->add_option("--rounds", so.rounds, "rounds per run")->required();
    sim->add_option("--runs", so.runs, "independent runs");
    sim->add_option("--checkpoints", so.checkpoints, "log | final");
    sim->add_option("--strategy", so.stable_strategy, "stable-set strategy for time-to-stable");
    sim->add_option("--trials", so.trials, "randomized trials for the stable set");
    sim->add_option("--leader", so.leader, "naive task: item starting one win ahead");

    std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        print_error(err, "usage", e.what());
        return 2;
    }

    try {
        if (win->parsed()) {
            c_win.apply_threads();
            return cmd_winprob(c_win, perm_text, out);
        }
        if (eq->parsed()) {
            c_eq.apply_threads();
            return cmd_equilibria(c_eq, eo, out);
        }
        if (km->parsed()) {
            c_kmin.apply_threads();
            return cmd_kmin(c_kmin, ko, out);
        }
        if (opt->parsed()) {
            c_opt.apply_threads();
            return cmd_optimize(c_opt, oo, out);
        }
        if (sim->parsed()) {
            c_sim.apply_threads();
            return cmd_simulate(c_sim, so, out);
        }
    } catch (const UsageError& e) {
        print_error(err, "usage", e.what());
        return 2;
    } catch (const Error& e) {
        print_error(err, e.code(), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error(err, "internal", e.what());
        return 1;
    }
    print_error(err, "usage", "no command");
    return 2;
}

}  // namespace popdyn::cli
