#include "romerr/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "romerr/errors.hpp"
#include "romerr/features.hpp"
#include "romerr/io.hpp"
#include "romerr/noise.hpp"
#include "romerr/regress.hpp"

namespace romerr {

double TomlValue::as_number() const {
    if (type == Type::Integer) return static_cast<double>(integer);
    if (type == Type::Float) return number;
    throw validation_error("config value is not numeric");
}

namespace {

struct Parser {
    const std::string& text;
    std::size_t at = 0;
    int line = 1;

    explicit Parser(const std::string& t) : text(t) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw validation_error("config parse error at line " + std::to_string(line) + ": " + msg);
    }

    bool done() const { return at >= text.size(); }
    char peek() const { return text[at]; }

    void advance() {
        if (text[at] == '\n') ++line;
        ++at;
    }

    void skip_ws_and_comments(bool stop_at_newline) {
        while (!done()) {
            const char c = peek();
            if (c == '#') {
                while (!done() && peek() != '\n') advance();
            } else if (c == '\n') {
                if (stop_at_newline) return;
                advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                return;
            }
        }
    }

    std::string parse_key() {
        std::string key;
        while (!done()) {
            const char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
                c == '+') {
                key.push_back(c);
                advance();
            } else {
                break;
            }
        }
        if (key.empty()) fail("expected a key");
        return key;
    }

    TomlValue parse_value() {
        skip_ws_and_comments(true);
        if (done()) fail("expected a value");
        const char c = peek();
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        return parse_scalar();
    }

    TomlValue parse_string() {
        advance(); // opening quote
        TomlValue v;
        v.type = TomlValue::Type::String;
        while (!done() && peek() != '"') {
            if (peek() == '\\') {
                advance();
                if (done()) fail("dangling escape in string");
                const char e = peek();
                switch (e) {
                    case 'n': v.str.push_back('\n'); break;
                    case 't': v.str.push_back('\t'); break;
                    case '"': v.str.push_back('"'); break;
                    case '\\': v.str.push_back('\\'); break;
                    default: fail("unsupported escape in string");
                }
                advance();
            } else {
                v.str.push_back(peek());
                advance();
            }
        }
        if (done()) fail("unterminated string");
        advance(); // closing quote
        return v;
    }

    TomlValue parse_array() {
        advance(); // '['
        TomlValue v;
        v.type = TomlValue::Type::Array;
        for (;;) {
            skip_ws_and_comments(false);
            if (done()) fail("unterminated array");
            if (peek() == ']') {
                advance();
                return v;
            }
            v.array.push_back(parse_value());
            skip_ws_and_comments(false);
            if (done()) fail("unterminated array");
            if (peek() == ',') {
                advance();
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
    }

    TomlValue parse_scalar() {
        std::string token;
        while (!done()) {
            const char c = peek();
            if (c == '\n' || c == ',' || c == ']' || c == '#' ||
                std::isspace(static_cast<unsigned char>(c)))
                break;
            token.push_back(c);
            advance();
        }
        if (token.empty()) fail("expected a scalar value");
        TomlValue v;
        if (token == "true" || token == "false") {
            v.type = TomlValue::Type::Boolean;
            v.boolean = token == "true";
            return v;
        }
        const bool looks_float = token.find_first_of(".eE") != std::string::npos &&
                                 token.find_first_not_of("+-0123456789.eE") == std::string::npos;
        char* end = nullptr;
        if (!looks_float) {
            const long long value = std::strtoll(token.c_str(), &end, 10);
            if (end && *end == '\0') {
                v.type = TomlValue::Type::Integer;
                v.integer = value;
                return v;
            }
        }
        const double value = std::strtod(token.c_str(), &end);
        if (!end || *end != '\0') fail("cannot parse value '" + token + "'");
        v.type = TomlValue::Type::Float;
        v.number = value;
        return v;
    }
};

} // namespace

TomlTable parse_toml(const std::string& text) {
    Parser p(text);
    TomlTable table;
    std::string prefix;
    for (;;) {
        p.skip_ws_and_comments(false);
        if (p.done()) break;
        if (p.peek() == '[') {
            p.advance();
            p.skip_ws_and_comments(true);
            prefix = p.parse_key();
            p.skip_ws_and_comments(true);
            if (p.done() || p.peek() != ']') p.fail("expected ']' after table name");
            p.advance();
            continue;
        }
        const std::string key = p.parse_key();
        p.skip_ws_and_comments(true);
        if (p.done() || p.peek() != '=') p.fail("expected '=' after key '" + key + "'");
        p.advance();
        const std::string full = prefix.empty() ? key : prefix + "." + key;
        if (table.count(full)) p.fail("duplicate key '" + full + "'");
        table[full] = p.parse_value();
    }
    return table;
}

namespace {

const TomlValue* find(const TomlTable& table, const std::string& key) {
    const auto it = table.find(key);
    return it == table.end() ? nullptr : &it->second;
}

void read_int(const TomlTable& t, const std::string& key, int& out) {
    if (const auto* v = find(t, key)) {
        if (v->type != TomlValue::Type::Integer)
            throw validation_error("config key '" + key + "' must be an integer");
        out = static_cast<int>(v->integer);
    }
}

void read_u64(const TomlTable& t, const std::string& key, std::uint64_t& out) {
    if (const auto* v = find(t, key)) {
        if (v->type != TomlValue::Type::Integer)
            throw validation_error("config key '" + key + "' must be an integer");
        out = static_cast<std::uint64_t>(v->integer);
    }
}

void read_double(const TomlTable& t, const std::string& key, double& out) {
    if (const auto* v = find(t, key)) out = v->as_number();
}

void read_string(const TomlTable& t, const std::string& key, std::string& out) {
    if (const auto* v = find(t, key)) {
        if (v->type != TomlValue::Type::String)
            throw validation_error("config key '" + key + "' must be a string");
        out = v->str;
    }
}

void read_string_list(const TomlTable& t, const std::string& key, std::vector<std::string>& out) {
    if (const auto* v = find(t, key)) {
        if (v->type != TomlValue::Type::Array)
            throw validation_error("config key '" + key + "' must be an array");
        out.clear();
        for (const auto& e : v->array) {
            if (e.type != TomlValue::Type::String)
                throw validation_error("config key '" + key + "' must hold strings");
            out.push_back(e.str);
        }
    }
}

void read_int_list(const TomlTable& t, const std::string& key, std::vector<int>& out) {
    if (const auto* v = find(t, key)) {
        if (v->type != TomlValue::Type::Array)
            throw validation_error("config key '" + key + "' must be an array");
        out.clear();
        for (const auto& e : v->array) out.push_back(static_cast<int>(e.as_number()));
    }
}

void read_double_list(const TomlTable& t, const std::string& key, std::vector<double>& out) {
    if (const auto* v = find(t, key)) {
        if (v->type != TomlValue::Type::Array)
            throw validation_error("config key '" + key + "' must be an array");
        out.clear();
        for (const auto& e : v->array) out.push_back(e.as_number());
    }
}

void read_nested_doubles(const TomlTable& t, const std::string& key,
                         std::vector<std::vector<double>>& out) {
    if (const auto* v = find(t, key)) {
        if (v->type != TomlValue::Type::Array)
            throw validation_error("config key '" + key + "' must be an array of arrays");
        out.clear();
        for (const auto& inner : v->array) {
            if (inner.type != TomlValue::Type::Array)
                throw validation_error("config key '" + key + "' must be an array of arrays");
            std::vector<double> values;
            for (const auto& e : inner.array) values.push_back(e.as_number());
            out.push_back(std::move(values));
        }
    }
}

std::string doubles_to_toml(const std::vector<double>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += format_double(values[i]);
    }
    return out + "]";
}

std::string ints_to_toml(const std::vector<int>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(values[i]);
    }
    return out + "]";
}

std::string strings_to_toml(const std::vector<std::string>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += "\"" + values[i] + "\"";
    }
    return out + "]";
}

} // namespace

CampaignConfig CampaignConfig::from_toml(const std::string& text) {
    const TomlTable t = parse_toml(text);
    CampaignConfig c;
    read_int(t, "schema_version", c.schema_version);
    read_u64(t, "master_seed", c.master_seed);
    read_int(t, "threads", c.threads);

    read_string(t, "system.kind", c.system_kind);
    read_int(t, "system.n_cells", c.n_cells);
    read_double(t, "system.cell_width", c.cell_width);

    read_string(t, "surrogate.kind", c.surrogate.kind);
    read_int(t, "surrogate.K", c.surrogate.K);
    read_nested_doubles(t, "surrogate.pod_grid", c.surrogate.pod_grid);
    read_int(t, "surrogate.n_skip", c.surrogate.n_skip);
    read_string(t, "surrogate.reference", c.surrogate.reference);
    read_double(t, "surrogate.coarse_width", c.surrogate.coarse_width);

    read_string(t, "integrator.scheme", c.scheme);
    read_double(t, "integrator.dt", c.dt);
    read_int(t, "integrator.n_steps", c.n_steps);

    read_int(t, "coarse_grid.stride", c.coarse_stride);
    read_int(t, "coarse_grid.count", c.coarse_count);

    read_string(t, "data.feature_kind", c.feature_kind);
    read_string(t, "data.response", c.response);
    read_int(t, "data.n_train", c.n_train);
    read_int(t, "data.n_val", c.n_val);
    read_int(t, "data.n_test", c.n_test);
    read_int(t, "data.n_noise_train", c.n_noise_train);
    read_double(t, "data.pca_energy", c.pca_energy);

    read_string_list(t, "training.families", c.families);
    read_string(t, "training.mode", c.train_mode);
    read_double(t, "training.learning_rate", c.learning_rate);
    read_int(t, "training.max_epochs", c.max_epochs);
    read_int(t, "training.patience", c.patience);
    read_int(t, "training.restarts", c.restarts);
    read_double(t, "training.holdout_fraction", c.holdout_fraction);

    read_string_list(t, "noise.kinds", c.noise_kinds);

    read_int_list(t, "grids.depths", c.grids.depths);
    read_int_list(t, "grids.widths", c.grids.widths);
    read_double_list(t, "grids.ridges", c.grids.ridges);
    read_int_list(t, "grids.larx_widths", c.grids.larx_widths);
    read_int_list(t, "grids.knn_ks", c.grids.knn_ks);
    read_double_list(t, "grids.gp_lambdas", c.grids.gp_lambdas);

    c.validate();
    return c;
}

CampaignConfig CampaignConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return from_toml(text.str());
}

void CampaignConfig::validate() const {
    if (schema_version != 1) throw validation_error("unsupported schema_version");
    if (system_kind != "advection-diffusion" && system_kind != "burgers")
        throw validation_error("unknown system '" + system_kind +
                               "' (known: advection-diffusion, burgers)");
    if (surrogate.kind != "pod-galerkin" && surrogate.kind != "coarse-lfm")
        throw validation_error("unknown surrogate '" + surrogate.kind +
                               "' (known: pod-galerkin, coarse-lfm)");
    if (surrogate.kind == "pod-galerkin") {
        if (surrogate.K < 1 || surrogate.n_skip < 1)
            throw validation_error("pod-galerkin needs K >= 1 and n_skip >= 1");
        if (surrogate.pod_grid.empty())
            throw validation_error("pod-galerkin needs a non-empty pod_grid");
        if (surrogate.reference != "initial-state" && surrogate.reference != "zero")
            throw validation_error("surrogate reference must be 'initial-state' or 'zero'");
    } else if (surrogate.coarse_width <= 0.0) {
        throw validation_error("coarse-lfm needs a positive coarse_width");
    }
    MultistepScheme::from_name(scheme);
    if (dt <= 0.0 || n_steps < 1) throw validation_error("integrator needs dt > 0 and n_steps >= 1");
    if (coarse_stride < 1 || coarse_count < 1)
        throw validation_error("coarse grid needs positive stride and count");
    if (coarse_stride * coarse_count > n_steps)
        throw validation_error("coarse grid extends past the fine time grid");
    feature_kind_from_string(feature_kind);
    response_from_string(response);
    SplitConfig split;
    split.n_train = n_train;
    split.n_val = n_val;
    split.n_test = n_test;
    split.n_noise_train = n_noise_train;
    split.validate();
    if (pca_energy <= 0.0 || pca_energy > 1.0)
        throw validation_error("pca_energy must lie in (0, 1]");
    if (families.empty()) throw validation_error("at least one regression family is required");
    for (const auto& f : families) family_from_string(f);
    train_mode_from_string(train_mode);
    for (const auto& k : noise_kinds) noise_kind_from_string(k);
    if (learning_rate <= 0.0 || max_epochs < 1 || restarts < 1 || patience < 0)
        throw validation_error("invalid training settings");
    if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)
        throw validation_error("holdout_fraction must lie in (0, 1)");
}

std::string CampaignConfig::to_toml() const {
    std::ostringstream out;
    out << "schema_version = " << schema_version << "\n";
    out << "master_seed = " << master_seed << "\n";
    out << "threads = " << threads << "\n\n";

    out << "[system]\n";
    out << "kind = \"" << system_kind << "\"\n";
    if (system_kind == "advection-diffusion") out << "n_cells = " << n_cells << "\n";
    if (system_kind == "burgers") out << "cell_width = " << format_double(cell_width) << "\n";
    out << "\n[surrogate]\n";
    out << "kind = \"" << surrogate.kind << "\"\n";
    if (surrogate.kind == "pod-galerkin") {
        out << "K = " << surrogate.K << "\n";
        out << "pod_grid = [";
        for (std::size_t i = 0; i < surrogate.pod_grid.size(); ++i) {
            if (i) out << ", ";
            out << doubles_to_toml(surrogate.pod_grid[i]);
        }
        out << "]\n";
        out << "n_skip = " << surrogate.n_skip << "\n";
        out << "reference = \"" << surrogate.reference << "\"\n";
    } else {
        out << "coarse_width = " << format_double(surrogate.coarse_width) << "\n";
    }

    out << "\n[integrator]\n";
    out << "scheme = \"" << scheme << "\"\n";
    out << "dt = " << format_double(dt) << "\n";
    out << "n_steps = " << n_steps << "\n";

    out << "\n[coarse_grid]\n";
    out << "stride = " << coarse_stride << "\n";
    out << "count = " << coarse_count << "\n";

    out << "\n[data]\n";
    out << "feature_kind = \"" << feature_kind << "\"\n";
    out << "response = \"" << response << "\"\n";
    out << "n_train = " << n_train << "\n";
    out << "n_val = " << n_val << "\n";
    out << "n_test = " << n_test << "\n";
    out << "n_noise_train = " << n_noise_train << "\n";
    out << "pca_energy = " << format_double(pca_energy) << "\n";

    out << "\n[training]\n";
    out << "families = " << strings_to_toml(families) << "\n";
    out << "mode = \"" << train_mode << "\"\n";
    out << "learning_rate = " << format_double(learning_rate) << "\n";
    out << "max_epochs = " << max_epochs << "\n";
    out << "patience = " << patience << "\n";
    out << "restarts = " << restarts << "\n";
    out << "holdout_fraction = " << format_double(holdout_fraction) << "\n";

    out << "\n[noise]\n";
    out << "kinds = " << strings_to_toml(noise_kinds) << "\n";

    out << "\n[grids]\n";
    out << "depths = " << ints_to_toml(grids.depths) << "\n";
    out << "widths = " << ints_to_toml(grids.widths) << "\n";
    out << "ridges = " << doubles_to_toml(grids.ridges) << "\n";
    out << "larx_widths = " << ints_to_toml(grids.larx_widths) << "\n";
    out << "knn_ks = " << ints_to_toml(grids.knn_ks) << "\n";
    if (!grids.gp_lambdas.empty())
        out << "gp_lambdas = " << doubles_to_toml(grids.gp_lambdas) << "\n";
    return out.str();
}

} // namespace romerr
