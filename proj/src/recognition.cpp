#include "vlc/recognition.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <random>
#include <semaphore>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

namespace vlc {

// -------------------------------------------------------------- noise spec

void validate_noise(const NoiseSpec& n) {
    for (double v : {n.p, n.ps, n.pc}) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ConfigError("noise rate out of [0,1]: " + std::to_string(v));
        }
    }
}

NoiseSpec parse_noise_spec(std::string_view text) {
    NoiseSpec out;
    std::size_t pos = 0;
    bool saw_any = false;
    while (pos < text.size()) {
        auto end = text.find(',', pos);
        if (end == std::string_view::npos) end = text.size();
        auto item = text.substr(pos, end - pos);
        auto eq = item.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("noise spec item needs key=value: '" + std::string(item) + "'");
        }
        auto key = item.substr(0, eq);
        auto val = item.substr(eq + 1);
        double parsed;
        auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), parsed);
        if (ec != std::errc{} || p != val.data() + val.size()) {
            throw ConfigError("bad noise rate: '" + std::string(val) + "'");
        }
        if (key == "p") {
            out.p = parsed;
            out.ps = parsed;  // shorthand also covers the relational task
            out.pc = parsed;
        } else if (key == "ps") {
            out.ps = parsed;
        } else if (key == "pc") {
            out.pc = parsed;
        } else {
            throw ConfigError("unknown noise key: '" + std::string(key) + "'");
        }
        saw_any = true;
        pos = end + 1;
    }
    if (!saw_any) throw ConfigError("empty noise spec");
    validate_noise(out);
    return out;
}

// ---------------------------------------------------------------- rendering

std::string render_concepts(const Concepts& c) {
    std::ostringstream os;
    os << "Answer: ";
    switch (task_of(c)) {
        case Task::MNAdd: {
            const auto& mc = std::get<MnAddConcepts>(c);
            os << mc.a << ", " << mc.b;
            break;
        }
        case Task::MNLogic: {
            const auto& mc = std::get<MnLogicConcepts>(c);
            for (std::size_t i = 0; i < mc.bits.size(); ++i) {
                if (i) os << ", ";
                os << int(mc.bits[i]);
            }
            break;
        }
        case Task::KandLogic: {
            const auto& kc = std::get<KandConcepts>(c);
            for (std::size_t i = 0; i < kc.objects.size(); ++i) {
                if (i) os << "; ";
                os << "(" << shape_name(kc.objects[i].shape) << ", "
                   << color_name(kc.objects[i].color) << ")";
            }
            break;
        }
    }
    return os.str();
}

// ------------------------------------------------------------------ parsing

namespace {

struct Scanner {
    std::string_view text;
    std::size_t pos = 0;      // cursor within payload
    std::size_t base = 0;     // payload offset within the full response

    void skip_ws() {
        while (pos < text.size() &&
               std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
    }
    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    bool done() {
        skip_ws();
        return pos >= text.size();
    }
    // longest run of alnum characters
    std::string_view word() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               std::isalnum(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        return text.substr(start, pos - start);
    }
    ParseError error(ParseError::Kind kind, std::size_t at, std::string_view span) const {
        auto shown = span.substr(0, 32);
        return {kind, std::string(shown), base + at};
    }
    ParseError error_here(ParseError::Kind kind) {
        skip_ws();
        return error(kind, pos, text.substr(pos));
    }
};

std::optional<std::uint64_t> scan_uint(Scanner& s) {
    s.skip_ws();
    std::size_t start = s.pos;
    while (s.pos < s.text.size() &&
           std::isdigit(static_cast<unsigned char>(s.text[s.pos]))) {
        ++s.pos;
    }
    if (s.pos == start) return std::nullopt;
    std::uint64_t value = 0;
    auto [p, ec] = std::from_chars(s.text.data() + start, s.text.data() + s.pos, value);
    if (ec != std::errc{}) return std::nullopt;  // overflow
    return value;
}

ParseOutcome parse_mnadd(Scanner& s) {
    auto a = scan_uint(s);
    if (!a) return s.error_here(ParseError::Kind::BadPayload);
    if (!s.eat(',')) return s.error_here(ParseError::Kind::BadPayload);
    auto b = scan_uint(s);
    if (!b) return s.error_here(ParseError::Kind::BadPayload);
    if (!s.done()) return s.error_here(ParseError::Kind::BadPayload);
    return Concepts{MnAddConcepts{*a, *b}};
}

ParseOutcome parse_mnlogic(Scanner& s, std::uint32_t m) {
    MnLogicConcepts out;
    while (true) {
        s.skip_ws();
        auto at = s.pos;
        auto w = s.word();
        if (w.empty()) return s.error_here(ParseError::Kind::BadPayload);
        if (w == "0" || w == "1") {
            out.bits.push_back(w == "1" ? 1 : 0);
        } else {
            return s.error(ParseError::Kind::UnknownToken, at, w);
        }
        if (s.done()) break;
        if (!s.eat(',')) return s.error_here(ParseError::Kind::BadPayload);
    }
    if (out.bits.size() != m) {
        return s.error(ParseError::Kind::WrongArity, s.text.size(), s.text);
    }
    return Concepts{std::move(out)};
}

ParseOutcome parse_kandlogic(Scanner& s, std::uint32_t m) {
    KandConcepts out;
    while (true) {
        if (!s.eat('(')) return s.error_here(ParseError::Kind::BadPayload);
        s.skip_ws();
        auto shape_at = s.pos;
        auto shape_word = s.word();
        auto shape = shape_from_name(shape_word);
        if (!shape) return s.error(ParseError::Kind::UnknownToken, shape_at, shape_word);
        if (!s.eat(',')) return s.error_here(ParseError::Kind::BadPayload);
        s.skip_ws();
        auto color_at = s.pos;
        auto color_word = s.word();
        auto color = color_from_name(color_word);
        if (!color) return s.error(ParseError::Kind::UnknownToken, color_at, color_word);
        if (!s.eat(')')) return s.error_here(ParseError::Kind::BadPayload);
        out.objects.push_back({*shape, *color});
        if (s.done()) break;
        if (!s.eat(';')) return s.error_here(ParseError::Kind::BadPayload);
    }
    if (out.objects.size() != m) {
        return s.error(ParseError::Kind::WrongArity, s.text.size(), s.text);
    }
    return Concepts{std::move(out)};
}

}  // namespace

ParseOutcome parse_response(Task task, std::uint32_t m, std::string_view text) {
    constexpr std::string_view kMarker = "Answer:";
    // last line that starts with the marker (leading whitespace tolerated)
    std::size_t best = std::string_view::npos;
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        auto line_end = text.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = text.size();
        auto content = line_start;
        while (content < line_end &&
               std::isspace(static_cast<unsigned char>(text[content]))) {
            ++content;
        }
        if (text.substr(content, kMarker.size()) == kMarker) best = content;
        if (line_end == text.size()) break;
        line_start = line_end + 1;
    }
    if (best == std::string_view::npos) {
        return ParseError{ParseError::Kind::NoAnswerLine, "", 0};
    }
    auto payload_start = best + kMarker.size();
    auto payload_end = text.find('\n', payload_start);
    if (payload_end == std::string_view::npos) payload_end = text.size();
    Scanner s{text.substr(payload_start, payload_end - payload_start), 0, payload_start};

    if (s.done()) return s.error_here(ParseError::Kind::BadPayload);
    switch (task) {
        case Task::MNAdd: return parse_mnadd(s);
        case Task::MNLogic: return parse_mnlogic(s, m);
        case Task::KandLogic: return parse_kandlogic(s, m);
    }
    return ParseError{ParseError::Kind::BadPayload, "", 0};
}

// -------------------------------------------------------------- NoisyOracle

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

NoisyOracle::NoisyOracle(Task task, std::uint32_t width, NoiseSpec noise,
                         std::uint64_t seed)
    : task_(task), width_(width), noise_(noise), seed_(seed) {
    validate_noise(noise_);
}

RecognizerResponse NoisyOracle::recognize(const Observation& obs) const {
    if (task_of(obs.truth) != task_) {
        throw LengthMismatch("observation concepts do not match the oracle task");
    }
    // per-sample generator keyed by (run seed, sample id)
    std::mt19937_64 rng(splitmix64(seed_ ^ splitmix64(obs.sample_id)));
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    Concepts noisy = obs.truth;
    switch (task_) {
        case Task::MNAdd: {
            auto& mc = std::get<MnAddConcepts>(noisy);
            std::uniform_int_distribution<int> other(0, 8);
            auto corrupt = [&](std::uint64_t v) {
                std::uint64_t scale = 1;
                for (std::uint32_t i = 0; i < width_; ++i) {
                    int digit = static_cast<int>(v / scale % 10);
                    if (coin(rng) < noise_.p) {
                        int r = other(rng);
                        if (r >= digit) ++r;  // uniform over the other nine
                        v -= static_cast<std::uint64_t>(digit) * scale;
                        v += static_cast<std::uint64_t>(r) * scale;
                    }
                    scale *= 10;
                }
                return v;
            };
            mc.a = corrupt(mc.a);
            mc.b = corrupt(mc.b);
            break;
        }
        case Task::MNLogic: {
            auto& mc = std::get<MnLogicConcepts>(noisy);
            for (auto& bit : mc.bits) {
                if (coin(rng) < noise_.p) bit ^= 1;
            }
            break;
        }
        case Task::KandLogic: {
            auto& kc = std::get<KandConcepts>(noisy);
            std::uniform_int_distribution<int> pick_other(1, 2);
            for (auto& obj : kc.objects) {
                if (coin(rng) < noise_.ps) {
                    obj.shape = static_cast<Shape>(
                        (static_cast<int>(obj.shape) + pick_other(rng)) % kShapeCount);
                }
                if (coin(rng) < noise_.pc) {
                    obj.color = static_cast<Color>(
                        (static_cast<int>(obj.color) + pick_other(rng)) % kColorCount);
                }
            }
            break;
        }
    }
    return {render_concepts(noisy)};
}

// ----------------------------------------------------------- ExternalClient

struct ExternalClient::Impl {
    std::string base;
    std::string path;
    Task task;
    std::uint32_t m;
    std::chrono::milliseconds timeout;
    RetryPolicy retry;
    std::string prompt;
    mutable std::counting_semaphore<> slots;

    Impl(int max_in_flight) : slots(max_in_flight) {}
};

ExternalClient::ExternalClient(std::string endpoint, Task task, std::uint32_t m,
                               std::chrono::milliseconds timeout, RetryPolicy retry,
                               std::string prompt, int max_in_flight)
    : impl_(std::make_unique<Impl>(std::max(1, max_in_flight))) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint needs a scheme: " + endpoint);
    }
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        impl_->base = endpoint;
        impl_->path = "/";
    } else {
        impl_->base = endpoint.substr(0, path_start);
        impl_->path = endpoint.substr(path_start);
    }
    impl_->task = task;
    impl_->m = m;
    impl_->timeout = timeout;
    impl_->retry = retry;
    impl_->prompt = prompt.empty() ? default_prompt(task) : std::move(prompt);
}

ExternalClient::~ExternalClient() = default;

RecognizerResponse ExternalClient::recognize(const Observation& obs) const {
    impl_->slots.acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{impl_->slots};

    nlohmann::json body{{"task", std::string(task_name(impl_->task))},
                        {"m", impl_->m},
                        {"image_path_or_b64", obs.image_ref},
                        {"prompt", impl_->prompt}};
    auto payload = body.dump();

    httplib::Error last_err = httplib::Error::Success;
    for (int attempt = 0; attempt < std::max(1, impl_->retry.attempts); ++attempt) {
        httplib::Client cli(impl_->base);
        cli.set_connection_timeout(impl_->timeout);
        cli.set_read_timeout(impl_->timeout);
        cli.set_write_timeout(impl_->timeout);
        auto res = cli.Post(impl_->path, payload, "application/json");
        if (!res) {
            last_err = res.error();
            continue;  // timeout/transport problems are retried
        }
        if (res->status < 200 || res->status >= 300) {
            throw NonSuccessStatus(res->status, "recognizer service returned status " +
                                                    std::to_string(res->status));
        }
        try {
            auto reply = nlohmann::json::parse(res->body);
            return {reply.at("text").get<std::string>()};
        } catch (const nlohmann::json::exception& e) {
            throw MalformedServiceReply(std::string("bad service reply: ") + e.what());
        }
    }
    if (last_err == httplib::Error::ConnectionTimeout || last_err == httplib::Error::Read ||
        last_err == httplib::Error::Write) {
        throw Timeout("recognizer request timed out after " +
                      std::to_string(impl_->retry.attempts) + " attempts");
    }
    throw TransportError("recognizer unreachable after " +
                         std::to_string(impl_->retry.attempts) + " attempts");
}

std::string default_prompt(Task task) {
    switch (task) {
        case Task::MNAdd:
            return "Identify the two multi-digit numbers shown in the image. Reply with "
                   "one line of the form 'Answer: <first>, <second>'.";
        case Task::MNLogic:
            return "Identify each binary digit shown in the image, left to right. Reply "
                   "with one line of the form 'Answer: <bit>, <bit>, ...'.";
        case Task::KandLogic:
            return "Identify the shape and color of every primitive in the image, left "
                   "to right. Reply with one line of the form 'Answer: (<shape>, "
                   "<color>); (<shape>, <color>); ...'.";
    }
    return "";
}

std::string load_prompt_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read prompt file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace vlc
