#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlc/errors.hpp"
#include "vlc/rules.hpp"

namespace vlc {

enum class Split : std::uint8_t { Train, Val, Test };

std::string_view split_name(Split s);
std::optional<Split> split_from_name(std::string_view name);

class SchemaError : public Error {
public:
    SchemaError(std::size_t line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct Sample {
    std::uint64_t id = 0;
    Split split = Split::Train;
    Concepts concepts;
    Answer label{Task::MNAdd, 0};
    bool operator==(const Sample&) const = default;
};

struct DatasetConfig {
    Task task = Task::MNAdd;
    std::uint32_t m = 3;  // digits or objects per sample
    std::uint64_t seed = 0;
    std::uint32_t n_train = 10000;
    std::uint32_t n_test = 3000;
    std::uint32_t n_val = 2000;
    std::string name;  // derived from task and m when empty
    bool operator==(const DatasetConfig&) const = default;
};

struct Dataset {
    DatasetConfig config;
    std::vector<Sample> samples;
    bool operator==(const Dataset&) const = default;
};

// Labels straight from the task definition, no circuits involved: the sum,
// the folded xor, or the pairwise same-shape-same-color check.
Answer reference_answer(const Concepts& c);

std::string default_dataset_name(Task task, std::uint32_t m);

// Concept-level sampling: digits uniform per position (leading zeros kept),
// bits uniform, shape/color pairs uniform. A pure function of the config.
Dataset generate(const DatasetConfig& cfg);

// One record per line; line 1 is the header
// {"kind":"dataset","task":...,"m":...,"seed":...,"version":1}.
std::string dataset_to_jsonl(const Dataset& d);
Dataset dataset_from_jsonl(std::string_view text);
void save_jsonl(const Dataset& d, const std::string& path);
Dataset load_jsonl(const std::string& path);

// The covariate-shift suite: same task and seed, object count 3 / 5 / 7.
std::vector<DatasetConfig> shift_suite(Task task, std::uint64_t seed);

}  // namespace vlc
