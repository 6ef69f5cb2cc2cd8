#include "tvmf/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <variant>
#include <vector>

namespace tvmf {

ConfigError::ConfigError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(line ? "line " + std::to_string(line) + ", column " + std::to_string(column) +
                                    ": " + message
                              : message),
      line_(line),
      column_(column) {}

namespace {

struct Number {
    double value;
    bool integral;
};
using Array = std::vector<Number>;
using Value = std::variant<std::string, bool, Number, Array>;

struct Entry {
    Value value;
    std::size_t line;
    std::size_t column;
};

using Document = std::map<std::string, std::map<std::string, Entry>>;

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Document parse() {
        Document doc;
        std::string section;
        std::set<std::string> sections_seen;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text_.size()) {
            const std::size_t eol = std::min(text_.find('\n', pos), text_.size());
            line_ = text_.substr(pos, eol - pos);
            if (!line_.empty() && line_.back() == '\r') line_.remove_suffix(1);
            ++line_no;
            line_no_ = line_no;
            col_ = 0;
            skip_ws();
            if (!at_end() && peek() != '#') {
                if (peek() == '[') {
                    section = parse_header();
                    if (!sections_seen.insert(section).second) error("duplicate section [" + section + "]");
                    doc[section];
                } else {
                    const std::size_t key_col = col_ + 1;
                    std::string key = parse_key();
                    skip_ws();
                    expect('=');
                    skip_ws();
                    const std::size_t value_col = col_ + 1;
                    Value v = parse_value();
                    skip_ws();
                    if (!at_end() && peek() != '#') error("unexpected trailing characters");
                    if (section.empty()) throw ConfigError("key '" + key + "' outside any section", line_no, key_col);
                    auto [it, inserted] = doc[section].emplace(key, Entry{std::move(v), line_no, value_col});
                    if (!inserted) throw ConfigError("duplicate key '" + key + "'", line_no, key_col);
                }
            }
            if (eol == text_.size()) break;
            pos = eol + 1;
        }
        return doc;
    }

private:
    bool at_end() const { return col_ >= line_.size(); }
    char peek() const { return line_[col_]; }

    [[noreturn]] void error(const std::string& msg) const { throw ConfigError(msg, line_no_, col_ + 1); }

    void skip_ws() {
        while (!at_end() && (peek() == ' ' || peek() == '\t')) ++col_;
    }

    void expect(char c) {
        if (at_end() || peek() != c) error(std::string("expected '") + c + "'");
        ++col_;
    }

    std::string parse_key() {
        const std::size_t start = col_;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++col_;
        if (start == col_) error("expected a key");
        return std::string(line_.substr(start, col_ - start));
    }

    std::string parse_header() {
        expect('[');
        skip_ws();
        std::string name = parse_key();
        skip_ws();
        expect(']');
        skip_ws();
        if (!at_end() && peek() != '#') error("unexpected characters after section header");
        return name;
    }

    Value parse_value() {
        if (at_end()) error("missing value");
        const char c = peek();
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        if (line_.substr(col_).starts_with("true")) {
            col_ += 4;
            return true;
        }
        if (line_.substr(col_).starts_with("false")) {
            col_ += 5;
            return false;
        }
        return parse_number();
    }

    std::string parse_string() {
        expect('"');
        std::string out;
        while (!at_end() && peek() != '"') {
            if (peek() == '\\') {
                ++col_;
                if (at_end()) break;
                const char e = peek();
                out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
            } else {
                out += peek();
            }
            ++col_;
        }
        if (at_end()) error("unterminated string");
        ++col_;
        return out;
    }

    Number parse_number() {
        const std::size_t start = col_;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' ||
                             peek() == '-' || peek() == '+' || peek() == '_')) {
            ++col_;
        }
        std::string token(line_.substr(start, col_ - start));
        std::erase(token, '_');
        if (token.empty()) {
            col_ = start;
            error("expected a value");
        }
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size() || errno == ERANGE) {
            col_ = start;
            error("invalid number '" + token + "'");
        }
        const bool integral = token.find_first_of(".eEin") == std::string::npos;
        return {v, integral};
    }

    Array parse_array() {
        expect('[');
        Array out;
        skip_ws();
        if (!at_end() && peek() == ']') {
            ++col_;
            return out;
        }
        for (;;) {
            skip_ws();
            out.push_back(parse_number());
            skip_ws();
            if (at_end()) error("unterminated array");
            if (peek() == ']') {
                ++col_;
                return out;
            }
            expect(',');
        }
    }

    std::string_view text_;
    std::string_view line_;
    std::size_t line_no_ = 0;
    std::size_t col_ = 0;
};

// staging for values that are validated together after parsing
struct Staging {
    std::string similarity = "tvmf";
    double kappa = 16.0;
    std::string dataset = "synthetic";
};

struct Field {
    const char* section;
    const char* key;
    std::function<void(const Entry&, ExperimentConfig&, Staging&)> set;
    std::function<std::string(const ExperimentConfig&, const Staging&)> show;
};

[[noreturn]] void type_error(const Entry& e, const std::string& expected) {
    throw ConfigError("expected " + expected, e.line, e.column);
}

double as_double(const Entry& e) {
    const auto* n = std::get_if<Number>(&e.value);
    if (!n) type_error(e, "a number");
    return n->value;
}

std::uint64_t as_uint(const Entry& e) {
    const auto* n = std::get_if<Number>(&e.value);
    if (!n || !n->integral || n->value < 0) type_error(e, "a nonnegative integer");
    return static_cast<std::uint64_t>(n->value);
}

bool as_bool(const Entry& e) {
    const auto* b = std::get_if<bool>(&e.value);
    if (!b) type_error(e, "true or false");
    return *b;
}

std::string as_string(const Entry& e) {
    const auto* s = std::get_if<std::string>(&e.value);
    if (!s) type_error(e, "a quoted string");
    return *s;
}

template <typename T>
std::vector<T> as_uint_array(const Entry& e) {
    const auto* a = std::get_if<Array>(&e.value);
    if (!a) type_error(e, "an array of nonnegative integers");
    std::vector<T> out;
    for (const Number& n : *a) {
        if (!n.integral || n.value < 0) type_error(e, "an array of nonnegative integers");
        out.push_back(static_cast<T>(n.value));
    }
    return out;
}

std::string show_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    if (s.find_first_of(".eEin") == std::string::npos) s += ".0";
    return s;
}

std::string show_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

template <typename T>
std::string show_array(const std::vector<T>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
    return out + "]";
}

#define TVMF_DOUBLE(SEC, KEY, MEMBER)                                                           \
    Field {                                                                                     \
        SEC, KEY, [](const Entry& e, ExperimentConfig& c, Staging&) { c.MEMBER = as_double(e); }, \
            [](const ExperimentConfig& c, const Staging&) { return show_double(c.MEMBER); }     \
    }
#define TVMF_UINT(SEC, KEY, MEMBER)                                                                 \
    Field {                                                                                         \
        SEC, KEY,                                                                                   \
            [](const Entry& e, ExperimentConfig& c, Staging&) {                                     \
                c.MEMBER = static_cast<decltype(c.MEMBER)>(as_uint(e));                             \
            },                                                                                      \
            [](const ExperimentConfig& c, const Staging&) { return std::to_string(c.MEMBER); }      \
    }
#define TVMF_BOOL(SEC, KEY, MEMBER)                                                                 \
    Field {                                                                                         \
        SEC, KEY, [](const Entry& e, ExperimentConfig& c, Staging&) { c.MEMBER = as_bool(e); },     \
            [](const ExperimentConfig& c, const Staging&) { return std::string(c.MEMBER ? "true" : "false"); } \
    }

const std::vector<Field>& schema() {
    static const std::vector<Field> fields = {
        Field{"data", "kind", [](const Entry& e, ExperimentConfig&, Staging& s) { s.dataset = as_string(e); },
              [](const ExperimentConfig&, const Staging& s) { return show_string(s.dataset); }},
        TVMF_UINT("data", "seed", data.synthetic.seed),
        TVMF_UINT("data", "num_classes", data.synthetic.num_classes),
        TVMF_UINT("data", "dim", data.synthetic.dim),
        TVMF_UINT("data", "per_class", data.synthetic.per_class),
        TVMF_DOUBLE("data", "spread", data.synthetic.spread),
        TVMF_UINT("data", "classes_per_task", data.synthetic.classes_per_task),
        Field{"data", "path", [](const Entry& e, ExperimentConfig& c, Staging&) { c.data.cifar_path = as_string(e); },
              [](const ExperimentConfig& c, const Staging&) { return show_string(c.data.cifar_path); }},

        Field{"model", "backbone_hidden",
              [](const Entry& e, ExperimentConfig& c, Staging&) {
                  c.run.backbone_hidden = as_uint_array<std::size_t>(e);
              },
              [](const ExperimentConfig& c, const Staging&) { return show_array(c.run.backbone_hidden); }},
        TVMF_UINT("model", "projection_dim", run.projection_dim),

        Field{"loss", "similarity", [](const Entry& e, ExperimentConfig&, Staging& s) { s.similarity = as_string(e); },
              [](const ExperimentConfig&, const Staging& s) { return show_string(s.similarity); }},
        Field{"loss", "kappa", [](const Entry& e, ExperimentConfig&, Staging& s) { s.kappa = as_double(e); },
              [](const ExperimentConfig&, const Staging& s) { return show_double(s.kappa); }},
        TVMF_DOUBLE("loss", "temperature", run.loss.temperature),
        TVMF_BOOL("loss", "normalize_by_anchors", run.loss.normalize_by_anchors),

        TVMF_DOUBLE("optim", "learning_rate", run.sgd.learning_rate),
        TVMF_DOUBLE("optim", "momentum", run.sgd.momentum),
        TVMF_UINT("optim", "epochs_per_task", run.sgd.epochs_per_task),
        TVMF_UINT("optim", "batch_current", run.sgd.batch_current),
        TVMF_UINT("optim", "batch_buffer", run.sgd.batch_buffer),

        TVMF_UINT("buffer", "capacity", run.buffer_capacity),

        TVMF_DOUBLE("augment", "noise_sigma", run.augment.noise_sigma),
        TVMF_DOUBLE("augment", "scale_jitter", run.augment.scale_jitter),
        TVMF_UINT("augment", "crop_padding", run.augment.crop_padding),
        TVMF_DOUBLE("augment", "flip_probability", run.augment.flip_probability),
        TVMF_UINT("augment", "seed", run.augment.seed),

        TVMF_UINT("probe", "epochs", run.probe.epochs),
        TVMF_DOUBLE("probe", "learning_rate", run.probe.learning_rate),
        TVMF_BOOL("probe", "on_embedding", run.probe.on_embedding),

        Field{"run", "seeds",
              [](const Entry& e, ExperimentConfig& c, Staging&) { c.run.seeds = as_uint_array<std::uint64_t>(e); },
              [](const ExperimentConfig& c, const Staging&) { return show_array(c.run.seeds); }},
        Field{"run", "output_dir",
              [](const Entry& e, ExperimentConfig& c, Staging&) { c.output_dir = as_string(e); },
              [](const ExperimentConfig& c, const Staging&) { return show_string(c.output_dir.string()); }},
    };
    return fields;
}

#undef TVMF_DOUBLE
#undef TVMF_UINT
#undef TVMF_BOOL

Staging staging_of(const ExperimentConfig& cfg) {
    Staging s;
    s.similarity = cfg.run.loss.kind.name();
    s.kappa = cfg.run.loss.kind.kappa();
    s.dataset = cfg.data.kind == DatasetKind::Cifar10 ? "cifar10" : "synthetic";
    return s;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
    const Document doc = Parser(text).parse();
    ExperimentConfig cfg;
    Staging staging = staging_of(cfg);

    for (const auto& [section, entries] : doc) {
        bool known_section = false;
        for (const Field& f : schema()) known_section |= section == f.section;
        if (!known_section) {
            std::size_t line = 0;
            for (const auto& [k, e] : entries) line = line ? std::min(line, e.line) : e.line;
            throw ConfigError("unknown section [" + section + "]", line, 1);
        }
        for (const auto& [key, entry] : entries) {
            const Field* field = nullptr;
            for (const Field& f : schema())
                if (section == f.section && key == f.key) field = &f;
            if (!field) throw ConfigError("unknown key '" + key + "' in [" + section + "]", entry.line, 1);
            field->set(entry, cfg, staging);
        }
    }

    auto position_of = [&](const char* section, const char* key) -> std::pair<std::size_t, std::size_t> {
        auto s = doc.find(section);
        if (s == doc.end()) return {0, 0};
        auto k = s->second.find(key);
        if (k == s->second.end()) return {0, 0};
        return {k->second.line, k->second.column};
    };

    try {
        const double kappa = staging.similarity == "cosine" ? 0.0 : staging.kappa;
        cfg.run.loss.kind = SimilarityKind::from_name(staging.similarity, kappa);
    } catch (const std::exception& e) {
        auto [line, col] = position_of("loss", "similarity");
        throw ConfigError(e.what(), line, col);
    }
    if (staging.dataset == "synthetic") {
        cfg.data.kind = DatasetKind::Synthetic;
    } else if (staging.dataset == "cifar10") {
        cfg.data.kind = DatasetKind::Cifar10;
    } else {
        auto [line, col] = position_of("data", "kind");
        throw ConfigError("data.kind must be \"synthetic\" or \"cifar10\"", line, col);
    }

    try {
        cfg.run.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid settings: ") + e.what(), 0, 0);
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string(), 0, 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_toml(const ExperimentConfig& cfg) {
    const Staging staging = staging_of(cfg);
    std::string out;
    std::string current;
    for (const Field& f : schema()) {
        if (current != f.section) {
            out += (current.empty() ? "[" : "\n[") + std::string(f.section) + "]\n";
            current = f.section;
        }
        out += std::string(f.key) + " = " + f.show(cfg, staging) + "\n";
    }
    return out;
}

TaskStream load_stream(const DataSource& data) {
    if (data.kind == DatasetKind::Synthetic) return synthetic_stream(data.synthetic);
    std::string path = data.cifar_path;
    if (path.empty()) {
        if (const char* env = std::getenv("TVMF_CL_DATA_DIR")) path = env;
    }
    if (path.empty()) {
        throw std::runtime_error("CIFAR-10 selected but neither data.path nor TVMF_CL_DATA_DIR is set");
    }
    return load_cifar10_binary(path);
}

}  // namespace tvmf
