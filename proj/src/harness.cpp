#include "vlc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

namespace vlc {

// -------------------------------------------------------------- aggregation

namespace {

MetricStats stats_of(const std::vector<double>& xs) {
    MetricStats s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= double(xs.size());
    if (xs.size() > 1) {
        double acc = 0;
        for (double x : xs) acc += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(acc / double(xs.size() - 1));
    }
    return s;
}

}  // namespace

EvalReport EvalReport::aggregate(std::string dataset, std::vector<SeedRecord> records) {
    EvalReport r;
    r.dataset = std::move(dataset);
    r.per_seed = std::move(records);
    std::vector<double> c, t, f;
    for (const auto& rec : r.per_seed) {
        c.push_back(rec.concept_acc);
        t.push_back(rec.task_acc);
        f.push_back(rec.parse_fail);
    }
    r.concept_acc = stats_of(c);
    r.task_acc = stats_of(t);
    r.parse_fail = stats_of(f);
    return r;
}

// ----------------------------------------------------------------- run_eval

namespace {

struct Counts {
    std::uint64_t n = 0, concept_ok = 0, task_ok = 0, fails = 0;
    std::uint64_t micro_ok = 0, micro_total = 0;

    void merge(const Counts& o) {
        n += o.n;
        concept_ok += o.concept_ok;
        task_ok += o.task_ok;
        fails += o.fails;
        micro_ok += o.micro_ok;
        micro_total += o.micro_total;
    }
};

std::uint64_t micro_items(Task task, std::uint32_t m) {
    return task == Task::MNAdd ? 2 : m;
}

std::uint64_t micro_matches(const Concepts& got, const Concepts& truth) {
    std::uint64_t ok = 0;
    switch (task_of(truth)) {
        case Task::MNAdd: {
            const auto& g = std::get<MnAddConcepts>(got);
            const auto& t = std::get<MnAddConcepts>(truth);
            ok += g.a == t.a;
            ok += g.b == t.b;
            break;
        }
        case Task::MNLogic: {
            const auto& g = std::get<MnLogicConcepts>(got);
            const auto& t = std::get<MnLogicConcepts>(truth);
            for (std::size_t i = 0; i < t.bits.size(); ++i) ok += g.bits[i] == t.bits[i];
            break;
        }
        case Task::KandLogic: {
            const auto& g = std::get<KandConcepts>(got);
            const auto& t = std::get<KandConcepts>(truth);
            for (std::size_t i = 0; i < t.objects.size(); ++i) {
                ok += g.objects[i] == t.objects[i];
            }
            break;
        }
    }
    return ok;
}

void eval_one(const Sample& s, const Recognizer& recognizer, const RuleBundle& bundle,
              Task task, std::uint32_t m, Counts& c) {
    ++c.n;
    c.micro_total += micro_items(task, m);

    RecognizerResponse resp;
    try {
        resp = recognizer.recognize({s.id, s.concepts, ""});
    } catch (const RecognitionError&) {
        ++c.fails;  // surfaced per sample, scored wrong on both metrics
        return;
    }
    auto outcome = parse_response(task, m, resp.text);
    if (std::holds_alternative<ParseError>(outcome)) {
        ++c.fails;
        return;
    }
    const auto& got = std::get<Concepts>(outcome);
    if (got == s.concepts) ++c.concept_ok;
    c.micro_ok += micro_matches(got, s.concepts);
    try {
        if (answer(bundle, got) == s.label) ++c.task_ok;
    } catch (const ConceptOutOfRange&) {
        ++c.fails;  // parsed but unencodable, e.g. a number past the bit width
    } catch (const LengthMismatch&) {
        ++c.fails;
    }
}

}  // namespace

SeedRecord run_eval(const Dataset& dataset, const Recognizer& recognizer,
                    const RuleBundle& bundle, std::uint64_t seed,
                    const EvalOptions& opts) {
    if (dataset.config.task != bundle.task ||
        dataset.config.m != bundle.dataset_width()) {
        throw BundleMismatch("dataset " + dataset.config.name + " does not match bundle " +
                             std::string(task_name(bundle.task)) + "/" +
                             std::to_string(bundle.dataset_width()));
    }
    std::vector<const Sample*> test;
    test.reserve(dataset.samples.size());
    for (const auto& s : dataset.samples) {
        if (s.split == Split::Test) test.push_back(&s);
    }

    Task task = dataset.config.task;
    std::uint32_t m = dataset.config.m;
    unsigned threads = opts.threads > 0 ? unsigned(opts.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, std::max<std::size_t>(test.size(), 1));

    std::vector<Counts> partial(threads);
    if (threads <= 1) {
        for (const auto* s : test) eval_one(*s, recognizer, bundle, task, m, partial[0]);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                std::size_t lo = test.size() * t / threads;
                std::size_t hi = test.size() * (t + 1) / threads;
                for (std::size_t i = lo; i < hi; ++i) {
                    eval_one(*test[i], recognizer, bundle, task, m, partial[t]);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    Counts total;
    for (const auto& p : partial) total.merge(p);

    SeedRecord rec;
    rec.seed = seed;
    rec.n = total.n;
    if (total.n > 0) {
        rec.concept_acc = double(total.concept_ok) / double(total.n);
        rec.task_acc = double(total.task_ok) / double(total.n);
        rec.parse_fail = double(total.fails) / double(total.n);
    }
    if (total.micro_total > 0) {
        rec.concept_acc_micro = double(total.micro_ok) / double(total.micro_total);
    }
    return rec;
}

// -------------------------------------------------------------------- sweep

std::vector<EvalReport> sweep(Task task, const NoiseSpec& noise,
                              const std::vector<std::uint64_t>& seeds,
                              const SweepOptions& opts) {
    if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
    validate_noise(noise);
    std::vector<EvalReport> reports;
    for (auto cfg : shift_suite(task, opts.data_seed)) {
        if (opts.n_train) cfg.n_train = opts.n_train;
        if (opts.n_test) cfg.n_test = opts.n_test;
        if (opts.n_val) cfg.n_val = opts.n_val;
        auto dataset = generate(cfg);
        auto bundle = build_for_dataset(task, cfg.m, opts.vtree);
        std::vector<SeedRecord> records;
        records.reserve(seeds.size());
        for (auto seed : seeds) {
            NoisyOracle oracle(task, cfg.m, noise, seed);
            records.push_back(run_eval(dataset, oracle, bundle, seed, opts.eval));
        }
        reports.push_back(EvalReport::aggregate(cfg.name, std::move(records)));
    }
    return reports;
}

// ------------------------------------------------------------------ reports

namespace {

std::string fixed(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string pm(const MetricStats& s) {
    return fixed(s.mean, 2) + " \xc2\xb1 " + fixed(s.stddev, 2);
}

}  // namespace

std::string render_report(const std::vector<EvalReport>& reports, ReportFormat fmt) {
    std::ostringstream os;
    if (fmt == ReportFormat::Csv) {
        os << "dataset,seed,concept_acc,task_acc,parse_fail,n\n";
        for (const auto& r : reports) {
            for (const auto& rec : r.per_seed) {
                os << r.dataset << "," << rec.seed << "," << fixed(rec.concept_acc, 6)
                   << "," << fixed(rec.task_acc, 6) << "," << fixed(rec.parse_fail, 6)
                   << "," << rec.n << "\n";
            }
            std::uint64_t n = 0;
            for (const auto& rec : r.per_seed) n += rec.n;
            os << r.dataset << ",all," << fixed(r.concept_acc.mean, 6) << ","
               << fixed(r.task_acc.mean, 6) << "," << fixed(r.parse_fail.mean, 6) << ","
               << n << "\n";
        }
        return os.str();
    }

    os << "| metric |";
    for (const auto& r : reports) os << " " << r.dataset << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < reports.size(); ++i) os << "---|";
    os << "\n";
    const char* rows[] = {"concept_acc", "task_acc", "parse_fail"};
    for (int row = 0; row < 3; ++row) {
        os << "| " << rows[row] << " |";
        for (const auto& r : reports) {
            const MetricStats& s = row == 0   ? r.concept_acc
                                   : row == 1 ? r.task_acc
                                              : r.parse_fail;
            os << " " << pm(s) << " |";
        }
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------- cli

namespace {

// flag-content problems exit with status 1, runtime problems with 2
class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

template <typename F>
auto as_usage(F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    auto range = text.find("..");
    try {
        if (range != std::string::npos) {
            auto lo = std::stoull(text.substr(0, range));
            auto hi = std::stoull(text.substr(range + 2));
            if (hi < lo) throw ConfigError("seed range is backwards: " + text);
            for (auto s = lo; s <= hi; ++s) out.push_back(s);
        } else {
            std::istringstream is(text);
            std::string item;
            while (std::getline(is, item, ',')) out.push_back(std::stoull(item));
        }
    } catch (const std::logic_error&) {
        throw ConfigError("bad seed list: " + text);
    }
    if (out.empty()) throw ConfigError("empty seed list: " + text);
    return out;
}

VtreeSpec parse_vtree_flags(const std::string& kind, std::uint64_t seed) {
    VtreeSpec spec;
    spec.seed = seed;
    if (kind == "right") {
        spec.kind = VtreeSpec::Kind::RightLinear;
    } else if (kind == "balanced") {
        spec.kind = VtreeSpec::Kind::Balanced;
    } else if (kind == "random") {
        spec.kind = VtreeSpec::Kind::Random;
    } else {
        throw ConfigError("unknown vtree kind: " + kind);
    }
    return spec;
}

Task parse_task_flag(const std::string& name) {
    auto task = task_from_name(name);
    if (!task) throw ConfigError("unknown task: " + name);
    return *task;
}

// Rule files: one formula per line, '#' starts a comment.
std::vector<Formula> parse_rule_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read rule file: " + path);
    std::vector<Formula> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        try {
            out.push_back(parse_formula(line.substr(first, last - first + 1)));
        } catch (const SyntaxError& e) {
            throw SyntaxError(e.offset(), e.expected(),
                              path + ":" + std::to_string(line_no));
        }
    }
    if (out.empty()) throw ConfigError("rule file has no formulas: " + path);
    return out;
}

void compile_rule_file(const std::string& rules_path, const VtreeSpec& vspec,
                       const std::string& out_dir) {
    namespace fs = std::filesystem;
    auto formulas = parse_rule_file(rules_path);
    // union of variables, first appearance across the file
    VarTable vars;
    for (const auto& f : formulas) {
        for (auto v : free_vars(f)) vars.intern(f.vars().name(v));
    }
    if (vars.size() == 0) throw ConfigError("rule file declares no variables");
    std::vector<std::string> names = vars.names();
    VTree vt = vspec.kind == VtreeSpec::Kind::Balanced ? VTree::balanced(names)
               : vspec.kind == VtreeSpec::Kind::Random ? VTree::random(names, vspec.seed)
                                                       : VTree::right_linear(names);
    Manager manager(std::move(vt));

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory: " + out_dir);
    {
        std::ofstream vtf(fs::path(out_dir) / "vtree.txt", std::ios::binary);
        if (!vtf) throw IoError("cannot write vtree file in " + out_dir);
        vtf << manager.vtree().dump();
    }
    nlohmann::ordered_json manifest;
    manifest["kind"] = "circuits";
    manifest["version"] = 1;
    manifest["vtree_file"] = "vtree.txt";
    char hash_hex[17];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(manager.vtree().structural_hash()));
    manifest["vtree_hash"] = hash_hex;
    auto outs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < formulas.size(); ++i) {
        auto name = "f_" + std::to_string(i);
        auto file = name + ".sdd";
        auto ref = manager.compile(formulas[i]);
        manager.save_circuit((fs::path(out_dir) / file).string(), ref);
        outs.push_back({{"name", name},
                        {"file", file},
                        {"source", formulas[i].to_string()}});
    }
    manifest["outputs"] = std::move(outs);
    std::ofstream mf(fs::path(out_dir) / "manifest.json", std::ios::binary);
    if (!mf) throw IoError("cannot write manifest in " + out_dir);
    mf << manifest.dump(2) << "\n";
}

struct CircuitSet {
    std::shared_ptr<Manager> manager;
    std::vector<std::pair<std::string, SddRef>> outputs;
};

// Accepts both bundle and plain circuit-set directories.
CircuitSet load_circuit_set(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!mf) throw IoError("cannot read manifest in " + dir);
    nlohmann::json manifest;
    try {
        mf >> manifest;
        if (manifest.at("kind") == "bundle") {
            auto b = load_bundle(dir);
            return {b.manager, b.outputs};
        }
        if (manifest.at("kind") != "circuits") {
            throw FormatError("manifest: unknown kind");
        }
        CircuitSet set;
        std::ifstream vt(fs::path(dir) / manifest.at("vtree_file").get<std::string>(),
                         std::ios::binary);
        if (!vt) throw IoError("cannot read vtree file in " + dir);
        std::ostringstream vbuf;
        vbuf << vt.rdbuf();
        set.manager = std::make_shared<Manager>(VTree::parse_dump(vbuf.str()));
        for (const auto& out : manifest.at("outputs")) {
            set.outputs.emplace_back(
                out.at("name").get<std::string>(),
                set.manager->load_circuit(
                    (fs::path(dir) / out.at("file").get<std::string>()).string()));
        }
        return set;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
}

void print_record(std::ostream& os, const std::string& dataset, const SeedRecord& rec) {
    os << "dataset: " << dataset << "\n"
       << "seed: " << rec.seed << "\n"
       << "n: " << rec.n << "\n"
       << "concept_acc: " << fixed(rec.concept_acc, 6) << "\n"
       << "task_acc: " << fixed(rec.task_acc, 6) << "\n"
       << "parse_fail: " << fixed(rec.parse_fail, 6) << "\n"
       << "concept_acc_micro: " << fixed(rec.concept_acc_micro, 6) << "\n";
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"circuit-compiled deductive reasoning over recognized concepts"};
    app.require_subcommand(1);

    // compile
    auto* compile = app.add_subcommand("compile", "compile task rules into circuit files");
    std::string c_task, c_vtree = "right", c_out, c_rules;
    std::uint32_t c_m = 3;
    std::uint64_t c_vtree_seed = 0;
    compile->add_option("--task", c_task, "mnadd|mnlogic|kandlogic");
    compile->add_option("--m", c_m, "objects per sample (digits for mnadd)");
    compile->add_option("--vtree", c_vtree, "right|balanced|random")
        ->default_str("right");
    compile->add_option("--vtree-seed", c_vtree_seed, "seed for --vtree random");
    compile->add_option("--rules", c_rules, "compile a rule file instead of a task");
    compile->add_option("--out", c_out, "output directory")->required();

    // gen
    auto* gen = app.add_subcommand("gen", "generate a concept-level dataset");
    std::string g_task, g_out;
    std::uint32_t g_m = 3, g_train = 10000, g_test = 3000, g_val = 2000;
    std::uint64_t g_seed = 0;
    gen->add_option("--task", g_task)->required();
    gen->add_option("--m", g_m)->required();
    gen->add_option("--seed", g_seed);
    gen->add_option("--train", g_train);
    gen->add_option("--test", g_test);
    gen->add_option("--val", g_val);
    gen->add_option("--out", g_out, "output JSONL path")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a dataset against a bundle");
    std::string e_dataset, e_bundle, e_noise = "p=0", e_endpoint, e_prompt_file;
    std::uint64_t e_seed = 0;
    int e_threads = 0;
    eval->add_option("--dataset", e_dataset)->required();
    eval->add_option("--bundle", e_bundle)->required();
    eval->add_option("--noise", e_noise, "p=X or ps=X,pc=Y");
    eval->add_option("--seed", e_seed);
    eval->add_option("--endpoint", e_endpoint, "external recognizer URL");
    eval->add_option("--prompt-file", e_prompt_file);
    eval->add_option("--threads", e_threads);

    // sweep
    auto* sw = app.add_subcommand("sweep", "run the 3/5/7 covariate-shift suite");
    std::string s_task, s_noise = "p=0", s_seeds = "0..4", s_format = "csv";
    std::uint64_t s_data_seed = 0;
    int s_threads = 0;
    std::uint32_t s_train = 0, s_test = 0, s_val = 0;
    sw->add_option("--task", s_task)->required();
    sw->add_option("--noise", s_noise);
    sw->add_option("--seeds", s_seeds, "range 0..4 or list 0,1,2");
    sw->add_option("--format", s_format, "csv|markdown");
    sw->add_option("--data-seed", s_data_seed, "dataset generation seed");
    sw->add_option("--threads", s_threads);
    sw->add_option("--train", s_train, "override train-split size");
    sw->add_option("--test", s_test, "override test-split size");
    sw->add_option("--val", s_val, "override val-split size");

    // count
    auto* count = app.add_subcommand("count", "model-count a compiled output");
    std::string n_bundle, n_output;
    count->add_option("--bundle", n_bundle)->required();
    count->add_option("--output", n_output, "output name, e.g. y or s_0")->required();

    // parse-check
    auto* pc = app.add_subcommand("parse-check", "parse a response from stdin");
    std::string p_task;
    std::uint32_t p_m = 3;
    pc->add_option("--task", p_task)->required();
    pc->add_option("--m", p_m)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (compile->parsed()) {
        auto vspec = as_usage([&] { return parse_vtree_flags(c_vtree, c_vtree_seed); });
        if (!c_rules.empty()) {
            compile_rule_file(c_rules, vspec, c_out);
        } else {
            if (c_task.empty()) {
                throw UsageError("compile needs --task or --rules");
            }
            auto task = as_usage([&] { return parse_task_flag(c_task); });
            save_bundle(build_for_dataset(task, c_m, vspec), c_out);
        }
        return 0;
    }
    if (gen->parsed()) {
        DatasetConfig cfg;
        cfg.task = as_usage([&] { return parse_task_flag(g_task); });
        cfg.m = g_m;
        cfg.seed = g_seed;
        cfg.n_train = g_train;
        cfg.n_test = g_test;
        cfg.n_val = g_val;
        save_jsonl(generate(cfg), g_out);
        return 0;
    }
    if (eval->parsed()) {
        auto dataset = load_jsonl(e_dataset);
        auto bundle = load_bundle(e_bundle);
        if (const char* env = std::getenv("VLC_ENDPOINT")) e_endpoint = env;
        std::unique_ptr<Recognizer> recognizer;
        if (!e_endpoint.empty()) {
            std::string prompt =
                e_prompt_file.empty() ? "" : load_prompt_file(e_prompt_file);
            recognizer = std::make_unique<ExternalClient>(
                e_endpoint, dataset.config.task, dataset.config.m,
                std::chrono::milliseconds(30000), RetryPolicy{}, prompt);
        } else {
            auto noise = as_usage([&] { return parse_noise_spec(e_noise); });
            recognizer = std::make_unique<NoisyOracle>(dataset.config.task,
                                                       dataset.config.m, noise, e_seed);
        }
        EvalOptions opts;
        opts.threads = e_threads;
        auto rec = run_eval(dataset, *recognizer, bundle, e_seed, opts);
        print_record(std::cout, dataset.config.name, rec);
        return 0;
    }
    if (sw->parsed()) {
        SweepOptions opts;
        opts.data_seed = s_data_seed;
        opts.eval.threads = s_threads;
        opts.n_train = s_train;
        opts.n_test = s_test;
        opts.n_val = s_val;
        auto task = as_usage([&] { return parse_task_flag(s_task); });
        auto noise = as_usage([&] { return parse_noise_spec(s_noise); });
        auto seeds = as_usage([&] { return parse_seed_list(s_seeds); });
        ReportFormat fmt;
        if (s_format == "csv") {
            fmt = ReportFormat::Csv;
        } else if (s_format == "markdown") {
            fmt = ReportFormat::Markdown;
        } else {
            throw UsageError("unknown format: " + s_format);
        }
        auto reports = sweep(task, noise, seeds, opts);
        std::cout << render_report(reports, fmt);
        return 0;
    }
    if (count->parsed()) {
        auto set = load_circuit_set(n_bundle);
        for (const auto& [name, ref] : set.outputs) {
            if (name != n_output) continue;
            std::vector<VarId> over(set.manager->vars().size());
            for (VarId v = 0; v < over.size(); ++v) over[v] = v;
            std::cout << name << " " << set.manager->model_count(ref, over) << "\n";
            return 0;
        }
        throw UsageError("no output named '" + n_output + "' in " + n_bundle);
    }
    if (pc->parsed()) {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        auto task = as_usage([&] { return parse_task_flag(p_task); });
        auto outcome = parse_response(task, p_m, buf.str());
        if (std::holds_alternative<ParseError>(outcome)) {
            const auto& err = std::get<ParseError>(outcome);
            const char* kind = err.kind == ParseError::Kind::NoAnswerLine ? "NoAnswerLine"
                               : err.kind == ParseError::Kind::BadPayload ? "BadPayload"
                               : err.kind == ParseError::Kind::WrongArity
                                   ? "WrongArity"
                                   : "UnknownToken";
            std::cerr << "parse error: " << kind << " at offset " << err.offset << " near '"
                      << err.span << "'\n";
            return 2;
        }
        auto rendered = render_concepts(std::get<Concepts>(outcome));
        constexpr std::string_view kPrefix = "Answer: ";
        std::cout << "(" << rendered.substr(kPrefix.size()) << ")\n";
        return 0;
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    try {
        return run_cli(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace vlc
