#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "vlc/errors.hpp"
#include "vlc/rules.hpp"

namespace vlc {

// Raw text as produced by a recognizer; no structure guaranteed.
struct RecognizerResponse {
    std::string text;
};

// What a recognizer gets to look at. The simulator reads the ground-truth
// concepts; an external service reads the image reference.
struct Observation {
    std::uint64_t sample_id = 0;
    Concepts truth;
    std::string image_ref;
};

// Per-concept corruption rates. `p` drives the arithmetic digits and the
// logic bits; `ps`/`pc` drive shape and color confusion. Replacements are
// uniform over the remaining options.
struct NoiseSpec {
    double p = 0.0;
    double ps = 0.0;
    double pc = 0.0;
};

// "p=0.1" or "ps=0.05,pc=0.05"; throws ConfigError on anything else or on
// rates outside [0,1].
NoiseSpec parse_noise_spec(std::string_view text);
void validate_noise(const NoiseSpec& n);

class RecognitionError : public Error {
public:
    explicit RecognitionError(const std::string& msg) : Error(msg) {}
};
class Timeout : public RecognitionError {
public:
    explicit Timeout(const std::string& msg) : RecognitionError(msg) {}
};
class TransportError : public RecognitionError {
public:
    explicit TransportError(const std::string& msg) : RecognitionError(msg) {}
};
class NonSuccessStatus : public RecognitionError {
public:
    NonSuccessStatus(int status, const std::string& msg)
        : RecognitionError(msg), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};
class MalformedServiceReply : public RecognitionError {
public:
    explicit MalformedServiceReply(const std::string& msg) : RecognitionError(msg) {}
};

// Classified parse failure with the offending span.
struct ParseError {
    enum class Kind : std::uint8_t { NoAnswerLine, BadPayload, WrongArity, UnknownToken };
    Kind kind;
    std::string span;
    std::size_t offset = 0;
};

using ParseOutcome = std::variant<Concepts, ParseError>;

// Scans for the last line starting with "Answer:" and parses the task
// payload: "640, 280" / "1, 0, 1" / "(circle, red); (square, blue)".
// Shape and color names match case-insensitively. Total on arbitrary bytes.
ParseOutcome parse_response(Task task, std::uint32_t m, std::string_view text);

// Canonical "Answer: ..." line for a concepts value; parse_response inverts it.
std::string render_concepts(const Concepts& c);

class Recognizer {
public:
    virtual ~Recognizer() = default;
    // Must be safe to call concurrently.
    virtual RecognizerResponse recognize(const Observation& obs) const = 0;
};

// Simulates an imperfect recognizer: corrupts the ground truth per NoiseSpec
// and renders it in the response grammar. Output is a pure function of
// (noise, seed, sample id, truth), so results do not depend on evaluation
// order or thread count.
class NoisyOracle : public Recognizer {
public:
    // width: decimal digits (MNAdd) or item count for the logic tasks
    NoisyOracle(Task task, std::uint32_t width, NoiseSpec noise, std::uint64_t seed);
    RecognizerResponse recognize(const Observation& obs) const override;

private:
    Task task_;
    std::uint32_t width_;
    NoiseSpec noise_;
    std::uint64_t seed_;
};

struct RetryPolicy {
    int attempts = 3;  // total tries for timeout/transport failures
};

// POSTs {"task","m","image_path_or_b64","prompt"} as JSON and returns the
// service's {"text": ...} verbatim. Failures surface per call as
// Timeout/TransportError/NonSuccessStatus/MalformedServiceReply; in-flight
// requests are bounded.
class ExternalClient : public Recognizer {
public:
    ExternalClient(std::string endpoint, Task task, std::uint32_t m,
                   std::chrono::milliseconds timeout = std::chrono::milliseconds(30000),
                   RetryPolicy retry = {}, std::string prompt = "",
                   int max_in_flight = 8);
    ~ExternalClient() override;
    RecognizerResponse recognize(const Observation& obs) const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Built-in instruction text describing the expected reply format; a per-task
// template file can override it.
std::string default_prompt(Task task);
std::string load_prompt_file(const std::string& path);

}  // namespace vlc
