#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "vlc/errors.hpp"
#include "vlc/sdd.hpp"

namespace vlc {

enum class Task : std::uint8_t { MNAdd, MNLogic, KandLogic };

std::string_view task_name(Task t);
std::optional<Task> task_from_name(std::string_view name);

enum class Shape : std::uint8_t { Circle, Square, Triangle };
enum class Color : std::uint8_t { Red, Yellow, Blue };

inline constexpr int kShapeCount = 3;
inline constexpr int kColorCount = 3;

std::string_view shape_name(Shape s);
std::string_view color_name(Color c);
// Case-insensitive; nullopt for anything outside the vocabulary.
std::optional<Shape> shape_from_name(std::string_view name);
std::optional<Color> color_from_name(std::string_view name);

class WidthOutOfRange : public Error {
public:
    explicit WidthOutOfRange(const std::string& msg) : Error(msg) {}
};
class ConceptOutOfRange : public Error {
public:
    explicit ConceptOutOfRange(const std::string& msg) : Error(msg) {}
};
class LengthMismatch : public Error {
public:
    explicit LengthMismatch(const std::string& msg) : Error(msg) {}
};
class UnknownVocabularyItem : public Error {
public:
    explicit UnknownVocabularyItem(const std::string& msg) : Error(msg) {}
};
class MissingOutputBit : public Error {
public:
    explicit MissingOutputBit(const std::string& name)
        : Error("missing output bit: " + name) {}
};

// Recognized content, typed per task.
struct MnAddConcepts {
    std::uint64_t a = 0, b = 0;
    bool operator==(const MnAddConcepts&) const = default;
};
struct MnLogicConcepts {
    std::vector<std::uint8_t> bits;  // entries 0/1
    bool operator==(const MnLogicConcepts&) const = default;
};
struct KandObject {
    Shape shape;
    Color color;
    bool operator==(const KandObject&) const = default;
};
struct KandConcepts {
    std::vector<KandObject> objects;
    bool operator==(const KandConcepts&) const = default;
};
using Concepts = std::variant<MnAddConcepts, MnLogicConcepts, KandConcepts>;

Task task_of(const Concepts& c);

// Task-typed label. MNAdd holds the decimal sum; the logic tasks hold 0/1.
struct Answer {
    Task task;
    std::uint64_t value = 0;
    bool operator==(const Answer&) const = default;
};

struct VtreeSpec {
    enum class Kind : std::uint8_t { RightLinear, Balanced, Random };
    Kind kind = Kind::RightLinear;
    std::uint64_t seed = 0;
};

// One reasoning task compiled into per-output-bit circuits over a shared
// manager. Builders establish the input layout; after that the bundle is
// immutable and safe to evaluate from many threads.
struct RuleBundle {
    Task task;
    std::uint32_t m = 0;             // bit width (MNAdd) / digits / objects
    std::uint32_t mnadd_digits = 0;  // decimal digits when known, else 0
    std::vector<std::string> inputs;
    std::vector<std::pair<std::string, SddRef>> outputs;
    std::shared_ptr<Manager> manager;

    // width in dataset terms: decimal digits (MNAdd) or objects per image
    std::uint32_t dataset_width() const {
        return task == Task::MNAdd ? mnadd_digits : m;
    }
};

// Ripple-carry adder: inputs a_i/b_i interleaved so the carry chain stays
// local under the right-linear vtree; outputs s_0..s_{m-1}, c_m.
RuleBundle build_mnadd(std::uint32_t bits, const VtreeSpec& vtree = {});
// Parity chain: inputs n_1..n_m, single output y.
RuleBundle build_mnlogic(std::uint32_t m, const VtreeSpec& vtree = {});
// Pairwise relational check over one-hot shape/color indicators: inputs
// S_i_<shape> and K_i_<color>, single output y. The circuit is only
// meaningful on one-hot assignments, which the codec guarantees.
RuleBundle build_kandlogic(std::uint32_t m, const VtreeSpec& vtree = {});

// Smallest bit width that represents every k-digit decimal number.
std::uint32_t bits_for_decimal_digits(std::uint32_t k);

// Builds the bundle matching a dataset's object count (digits for the
// arithmetic task are first converted to a bit width).
RuleBundle build_for_dataset(Task task, std::uint32_t width, const VtreeSpec& vtree = {});

// Concepts -> circuit inputs. Numbers land little-endian in a_i/b_i, bits in
// n_i, objects one-hot in S_i_*/K_i_*.
Assignment encode_concepts(const RuleBundle& b, const Concepts& c);

// Output bits -> answer. MNAdd reads c_m s_{m-1} ... s_0 as binary.
Answer decode_answer(const RuleBundle& b,
                     const std::unordered_map<std::string, bool>& outputs);

// encode, evaluate every output circuit, decode.
Answer answer(const RuleBundle& b, const Concepts& c);

// Bundle directory: vtree.txt + one .sdd file per output + manifest.json.
void save_bundle(const RuleBundle& b, const std::string& dir);
RuleBundle load_bundle(const std::string& dir);

}  // namespace vlc
