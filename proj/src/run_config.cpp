#include "qtorus/run_config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qtorus/errors.hpp"

namespace qtorus {

const std::vector<KeySpec>& config_keys() {
    static const std::vector<KeySpec> keys = {
        {"subcommand", ValueType::string, "spectrum",
         "spectrum | paircorr | theta-check | equidist | dioph | degeneracy | convergence-study"},
        {"k", ValueType::integer, "2", "torus dimension"},
        {"alpha", ValueType::string, "algebraic:2", "shift vector: p/q or decimals, algebraic:base, critical:base,r1,r2"},
        {"Lambda", ValueType::real, "100", "spectrum cutoff on lambda"},
        {"dump", ValueType::boolean, "false", "spectrum: write every eigenvalue"},
        {"X", ValueType::real_list, "1e3,1e4,1e5", "rescaled points X for windowed pair correlation"},
        {"window", ValueType::real_list, "0,1", "pair-correlation window a,b"},
        {"paircorr_mode", ValueType::string, "windowed", "paircorr: windowed | smoothed"},
        {"lambda", ValueType::real_list, "20", "lambda values for smoothed correlations and theta checks"},
        {"psi1", ValueType::string, "gauss:1", "first test function"},
        {"psi2", ValueType::string, "gauss:1", "second test function"},
        {"h_shape", ValueType::string, "triangle", "weight h: triangle | raised_cosine"},
        {"h_width", ValueType::real, "1", "half-width of the support of h"},
        {"h_amp", ValueType::real, "1", "h(0)"},
        {"v", ValueType::real_list, "0.02,0.005,0.00125", "horocycle heights"},
        {"sigma", ValueType::real, "-1", "stretch exponent; negative means k/2-1"},
        {"target", ValueType::string, "theta-pair", "equidist observable: constant | theta-pair | dominating"},
        {"R", ValueType::real_list, "2", "cusp cutoffs for the dominating function"},
        {"beta", ValueType::real, "-1", "dominating-function exponent; negative means k/2"},
        {"eps", ValueType::real, "0.5", "cusp diagnostic: |u| > v^(1-eps)"},
        {"q_max", ValueType::integer, "100000", "diophantine scan limit"},
        {"degeneracy_X", ValueType::real_list, "1e2,1e3,1e4,1e5,1e6", "X grid for degenerate pair counts"},
        {"block_T", ValueType::real_list, "", "block sums: T values"},
        {"block_D", ValueType::int_list, "", "block sums: D values (empty: floor(T^(1/(kappa-1))))"},
        {"kappa", ValueType::real, "1.5", "diophantine type assumed by block-sum defaults"},
        {"hat_tol", ValueType::real, "1e-14", "smoothed sum: h-hat envelope truncation"},
        {"tail_tol", ValueType::real, "1e-12", "smoothed sum: allowed psi tail mass"},
        {"theta_tol", ValueType::real, "1e-14", "theta sums: envelope truncation"},
        {"max_panel_width", ValueType::real, "0.25", "theta integral: largest panel width"},
        {"panel_budget", ValueType::integer, "20000000", "theta integral: panel limit"},
        {"richardson", ValueType::boolean, "true", "theta integral: also evaluate at half panel width"},
        {"memory_budget", ValueType::integer, "200000000", "spectrum: maximum number of eigenvalues"},
        {"theta_check_tol", ValueType::real, "1e-6", "theta-check: pass threshold on |direct - theta|"},
        {"abs_tol", ValueType::real, "1e-12", "adaptive quadrature tolerance"},
        {"mc_samples", ValueType::integer, "200000", "Monte-Carlo samples for the F_R mean"},
        {"seed", ValueType::integer, "20240101", "random seed"},
        {"output_dir", ValueType::string, "", "output directory (default: $QTORUS_OUT or qtorus-out)", false},
        {"spectrum_cache", ValueType::string, "", "binary spectrum cache file", false},
        {"workers", ValueType::integer, "0", "worker threads (0: OpenMP default)", false},
    };
    return keys;
}

const KeySpec* find_key(std::string_view name) {
    for (const auto& k : config_keys())
        if (k.name == name) return &k;
    return nullptr;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    std::string tmp(s);
    char* end = nullptr;
    out = std::strtod(tmp.c_str(), &end);
    return end == tmp.c_str() + tmp.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, std::int64_t& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && p == s.data() + s.size()) return true;
    double d;
    if (parse_double(s, d) && d == std::floor(d) && std::fabs(d) < 9.2e18) {
        out = static_cast<std::int64_t>(d);
        return true;
    }
    return false;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

// Strips a trailing comment outside quotes.
std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::string unquote(std::string_view s, const std::string& source, int line, int column) {
    if (s.size() < 2 || s.front() != '"' || s.back() != '"')
        throw ConfigError(source, line, column, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] == '\\' && i + 2 < s.size()) ++i;
        out.push_back(s[i]);
    }
    return out;
}

}  // namespace

ConfigValue parse_value(ValueType type, std::string_view text, const std::string& source, int line, int column) {
    const std::string_view t = trim(text);
    auto fail = [&](const std::string& what) -> ConfigValue {
        throw ConfigError(source, line, column, what + " (got '" + std::string(t) + "')");
    };
    switch (type) {
        case ValueType::integer: {
            std::int64_t v;
            if (!parse_int(t, v)) return fail("expected an integer");
            return v;
        }
        case ValueType::real: {
            double v;
            if (!parse_double(t, v)) return fail("expected a real number");
            return v;
        }
        case ValueType::boolean: {
            if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
            if (t == "false" || t == "0" || t == "no" || t == "off") return false;
            return fail("expected true or false");
        }
        case ValueType::string: {
            if (!t.empty() && t.front() == '"') return unquote(t, source, line, column);
            return std::string(t);
        }
        case ValueType::real_list: {
            std::vector<double> out;
            if (t.empty()) return out;
            for (auto part : split(t, ',')) {
                double v;
                if (!parse_double(part, v)) return fail("expected a comma-separated list of reals");
                out.push_back(v);
            }
            return out;
        }
        case ValueType::int_list: {
            std::vector<std::int64_t> out;
            if (t.empty()) return out;
            for (auto part : split(t, ',')) {
                std::int64_t v;
                if (!parse_int(part, v)) return fail("expected a comma-separated list of integers");
                out.push_back(v);
            }
            return out;
        }
    }
    return fail("unknown type");
}

std::string format_value(const ConfigValue& v) {
    struct Visitor {
        std::string operator()(std::int64_t x) const { return std::to_string(x); }
        std::string operator()(double x) const { return format_real(x); }
        std::string operator()(bool x) const { return x ? "true" : "false"; }
        std::string operator()(const std::string& s) const {
            bool plain = !s.empty();
            for (char c : s)
                if (c == '#' || c == '"' || std::isspace(static_cast<unsigned char>(c))) plain = false;
            if (plain) return s;
            std::string out = "\"";
            for (char c : s) {
                if (c == '"' || c == '\\') out.push_back('\\');
                out.push_back(c);
            }
            return out + "\"";
        }
        std::string operator()(const std::vector<double>& xs) const {
            std::string out;
            for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_real(xs[i]);
            return out;
        }
        std::string operator()(const std::vector<std::int64_t>& xs) const {
            std::string out;
            for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
            return out;
        }
    };
    return std::visit(Visitor{}, v);
}

RunConfig::RunConfig() {
    for (const auto& k : config_keys()) values_[k.name] = parse_value(k.type, k.default_text, "<defaults>", 1, 1);
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), 0, 0, "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig cfg;
    cfg.parse_text(ss.str(), path.string(), path.parent_path(), 0);
    return cfg;
}

RunConfig RunConfig::from_string(std::string_view text, const std::string& source,
                                 const std::filesystem::path& base_dir) {
    RunConfig cfg;
    cfg.parse_text(text, source, base_dir, 0);
    return cfg;
}

void RunConfig::parse_text(std::string_view text, const std::string& source, const std::filesystem::path& base_dir,
                           int depth) {
    if (depth > 16) throw ConfigError(source, 1, 1, "include nesting deeper than 16");
    int line_no = 0;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        const std::string_view line = strip_comment(raw);
        const std::string_view body = trim(line);
        if (body.empty()) continue;
        const int indent = static_cast<int>(body.data() - line.data()) + 1;
        if (body.substr(0, 7) == "include" && (body.size() == 7 || std::isspace(static_cast<unsigned char>(body[7])))) {
            const std::string_view arg = trim(body.substr(7));
            const int col = static_cast<int>(arg.data() - line.data()) + 1;
            if (arg.empty()) throw ConfigError(source, line_no, col, "include needs a quoted path");
            std::filesystem::path p = unquote(arg, source, line_no, col);
            if (p.is_relative()) p = base_dir / p;
            std::ifstream in(p);
            if (!in) throw ConfigError(source, line_no, col, "cannot open included file '" + p.string() + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            parse_text(ss.str(), p.string(), p.parent_path(), depth + 1);
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ConfigError(source, line_no, indent, "expected 'key = value'");
        const std::string_view key = trim(body.substr(0, eq));
        const std::string_view value = body.substr(eq + 1);
        const std::string_view vt = trim(value);
        const int vcol = static_cast<int>((vt.empty() ? value.data() : vt.data()) - line.data()) + 1;
        if (key.empty()) throw ConfigError(source, line_no, indent, "missing key before '='");
        if (!find_key(key)) throw ConfigError(source, line_no, indent, "unknown key '" + std::string(key) + "'");
        set(key, value, source, line_no, vcol);
    }
}

void RunConfig::set(std::string_view key, std::string_view value, const std::string& source, int line, int column) {
    const KeySpec* spec = find_key(key);
    if (!spec) throw ConfigError(source, line, column, "unknown key '" + std::string(key) + "'");
    values_[spec->name] = parse_value(spec->type, value, source, line, column);
    explicit_[spec->name] = true;
}

bool RunConfig::is_set(std::string_view key) const {
    auto it = explicit_.find(std::string(key));
    return it != explicit_.end() && it->second;
}

const ConfigValue& RunConfig::at(std::string_view key) const {
    auto it = values_.find(std::string(key));
    if (it == values_.end()) throw InvalidArgument("unknown config key '" + std::string(key) + "'");
    return it->second;
}

std::int64_t RunConfig::get_int(std::string_view key) const { return std::get<std::int64_t>(at(key)); }
double RunConfig::get_real(std::string_view key) const { return std::get<double>(at(key)); }
bool RunConfig::get_bool(std::string_view key) const { return std::get<bool>(at(key)); }
const std::string& RunConfig::get_string(std::string_view key) const { return std::get<std::string>(at(key)); }
const std::vector<double>& RunConfig::get_reals(std::string_view key) const {
    return std::get<std::vector<double>>(at(key));
}
const std::vector<std::int64_t>& RunConfig::get_ints(std::string_view key) const {
    return std::get<std::vector<std::int64_t>>(at(key));
}

std::string RunConfig::serialize() const {
    std::string out;
    for (const auto& k : config_keys()) out += k.name + " = " + format_value(at(k.name)) + "\n";
    return out;
}

std::string RunConfig::manifest_hash() const {
    std::string text;
    for (const auto& k : config_keys())
        if (k.hashed) text += k.name + "=" + format_value(at(k.name)) + "\n";
    return hex64(fnv1a(text));
}

// ---------------------------------------------------------------------------

namespace {

Rational parse_rational(std::string_view s) {
    s = trim(s);
    const auto slash = s.find('/');
    std::int64_t p = 0, q = 1;
    if (slash == std::string_view::npos) {
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), p);
        if (ec != std::errc() || ptr != s.data() + s.size()) throw InvalidArgument("malformed rational '" + std::string(s) + "'");
    } else {
        auto a = trim(s.substr(0, slash)), b = trim(s.substr(slash + 1));
        auto [p1, e1] = std::from_chars(a.data(), a.data() + a.size(), p);
        auto [p2, e2] = std::from_chars(b.data(), b.data() + b.size(), q);
        if (e1 != std::errc() || e2 != std::errc() || p1 != a.data() + a.size() || p2 != b.data() + b.size() || q == 0)
            throw InvalidArgument("malformed rational '" + std::string(s) + "'");
    }
    return Rational::make(p, q);
}

bool is_integer_text(std::string_view s) {
    s = trim(s);
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) s.remove_prefix(1);
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

PreciseVector parse_alpha(std::string_view text, int k) {
    text = trim(text);
    if (k < 2) throw InvalidArgument("k must be >= 2");
    if (text.substr(0, 10) == "algebraic:") {
        std::int64_t base;
        if (!parse_int(text.substr(10), base)) throw InvalidArgument("algebraic:base needs an integer base");
        return algebraic_vector(k, static_cast<int>(base));
    }
    if (text.substr(0, 9) == "critical:") {
        auto parts = split(text.substr(9), ',');
        if (parts.size() != 3) throw InvalidArgument("critical:base,r1,r2 needs three fields");
        std::int64_t base;
        if (!parse_int(parts[0], base)) throw InvalidArgument("critical: base must be an integer");
        return critical_vector(k, parse_rational(parts[1]), parse_rational(parts[2]), static_cast<int>(base));
    }
    PreciseVector out;
    for (auto part : split(text, ',')) {
        part = trim(part);
        if (part.find('/') != std::string_view::npos || is_integer_text(part))
            out.push_back(precise_from_rational(parse_rational(part)));
        else
            out.push_back(parse_precise(part));
    }
    if (static_cast<int>(out.size()) != k)
        throw InvalidArgument("alpha has " + std::to_string(out.size()) + " components, k = " + std::to_string(k));
    return out;
}

TestPsi parse_psi(std::string_view text) {
    text = trim(text);
    if (text.substr(0, 6) == "gauss:") {
        auto parts = split(text.substr(6), ':');
        double s = 1.0, c = 1.0;
        if (parts.empty() || parts.size() > 2 || !parse_double(parts[0], s) ||
            (parts.size() == 2 && !parse_double(parts[1], c)))
            throw InvalidArgument("psi: expected gauss:s or gauss:s:c");
        return TestPsi::gaussian(s, c);
    }
    if (text == "0") return TestPsi(std::vector<PsiTerm>{});
    std::vector<PsiTerm> terms;
    for (auto t : split(text, ';')) {
        auto f = split(trim(t), ':');
        PsiTerm term;
        std::int64_t p = 0;
        if (f.size() != 3 || !parse_double(f[0], term.c) || !parse_double(f[1], term.s) || !parse_int(f[2], p))
            throw InvalidArgument("psi: expected terms c:s:p joined by ';'");
        term.p = static_cast<int>(p);
        terms.push_back(term);
    }
    return TestPsi(std::move(terms));
}

std::string format_psi(const TestPsi& psi) {
    std::string out;
    for (const auto& t : psi.terms()) {
        if (!out.empty()) out += ';';
        out += format_real(t.c) + ":" + format_real(t.s) + ":" + std::to_string(t.p);
    }
    return out.empty() ? "0" : out;
}

}  // namespace qtorus
