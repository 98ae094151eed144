#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vlc/datasets.hpp"
#include "vlc/errors.hpp"
#include "vlc/recognition.hpp"
#include "vlc/rules.hpp"

namespace vlc {

class BundleMismatch : public Error {
public:
    explicit BundleMismatch(const std::string& msg) : Error(msg) {}
};

struct SeedRecord {
    std::uint64_t seed = 0;
    std::uint64_t n = 0;  // evaluated (test-split) samples
    double concept_acc = 0;
    double task_acc = 0;
    double parse_fail = 0;
    // diagnostic micro average: fraction of individual concepts correct
    double concept_acc_micro = 0;
};

struct MetricStats {
    double mean = 0;
    double stddev = 0;  // sample standard deviation over seeds
};

struct EvalReport {
    std::string dataset;
    std::vector<SeedRecord> per_seed;
    MetricStats concept_acc, task_acc, parse_fail;

    static EvalReport aggregate(std::string dataset, std::vector<SeedRecord> records);
};

struct EvalOptions {
    int threads = 0;  // 0 picks the hardware count
};

// Full pipeline over the test split: recognize, parse, encode, evaluate,
// decode. A sample is concept-correct iff the parsed concepts equal the
// ground truth, task-correct iff the decoded answer equals the label.
// Recognition and parse failures score wrong on both and count into the
// parse-failure rate. Sample order does not matter: corruption is keyed by
// sample id, and metrics are plain sums.
SeedRecord run_eval(const Dataset& dataset, const Recognizer& recognizer,
                    const RuleBundle& bundle, std::uint64_t seed,
                    const EvalOptions& opts = {});

struct SweepOptions {
    std::uint64_t data_seed = 0;
    VtreeSpec vtree;
    EvalOptions eval;
    // dataset size overrides; 0 keeps the defaults (10000/3000/2000)
    std::uint32_t n_train = 0, n_test = 0, n_val = 0;
};

// One report per object count in {3,5,7}, each aggregating every seed with a
// noisy-oracle recognizer.
std::vector<EvalReport> sweep(Task task, const NoiseSpec& noise,
                              const std::vector<std::uint64_t>& seeds,
                              const SweepOptions& opts = {});

enum class ReportFormat { Csv, Markdown };

// Csv: dataset,seed,concept_acc,task_acc,parse_fail,n with one aggregate row
// per dataset (seed=all). Markdown: variants as columns, mean +- std cells.
std::string render_report(const std::vector<EvalReport>& reports, ReportFormat fmt);

// Exit status 0 on success, 1 on usage errors, 2 on runtime errors.
int cli_main(int argc, const char* const* argv);

}  // namespace vlc
