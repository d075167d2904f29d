#include "dualgraph/normalize.hpp"

#include <array>
#include <cctype>
#include <cstdlib>
#include <set>

#include "dualgraph/text.hpp"

namespace dualgraph {

namespace {

constexpr std::array<std::string_view, 6> kStopWords = {"the", "a", "an", "of", "for", "with"};

// Words that look plural but are not, or whose stem would be misleading.
const std::set<std::string_view>& stem_exceptions() {
    static const std::set<std::string_view> words = {
        "series", "species", "news", "lens", "always", "yes", "plus", "this", "gps",
        "ios", "wireless", "bluetooth", "status", "canvas", "atlas", "bias", "chassis",
        "glasses", "pixels", "nits", "specs", "means", "sales", "ultras"};
    return words;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool has_digit(std::string_view s) {
    for (char c : s)
        if (std::isdigit(static_cast<unsigned char>(c))) return true;
    return false;
}

std::optional<std::string> canonicalize(std::string_view name) {
    auto tokens = text::alnum_tokens(name);
    std::vector<std::string> kept;
    for (auto& t : tokens)
        if (!is_stop_word(t)) kept.push_back(std::move(t));
    if (kept.size() >= 2) {
        std::vector<std::string> stemmed;
        for (const auto& t : kept) {
            auto s = light_stem(t);
            if (!is_stop_word(s)) stemmed.push_back(std::move(s));
        }
        kept = std::move(stemmed);
    }
    if (kept.empty()) return std::nullopt;
    return text::join(kept, "_");
}

}  // namespace

bool is_stop_word(std::string_view token) {
    for (auto w : kStopWords)
        if (w == token) return true;
    return false;
}

std::string light_stem(std::string_view token) {
    std::string t(token);
    if (t.size() <= 3 || has_digit(t) || stem_exceptions().count(t)) return t;
    if (ends_with(t, "ss") || ends_with(t, "us") || ends_with(t, "is")) return t;
    if (ends_with(t, "ies") && t.size() > 4) return t.substr(0, t.size() - 3) + "y";
    for (std::string_view suf : {"sses", "ches", "shes", "xes", "zes"}) {
        if (ends_with(t, suf)) return t.substr(0, t.size() - 2);
    }
    if (ends_with(t, "s")) return t.substr(0, t.size() - 1);
    return t;
}

CanonicalId canonical_id(std::string_view name) {
    auto id = canonicalize(name);
    if (!id) throw NormalizeError("empty identifier");
    return CanonicalId(std::move(*id));
}

std::optional<CanonicalId> try_canonical_id(std::string_view name) {
    try {
        return canonical_id(name);
    } catch (const NormalizeError&) {
        return std::nullopt;
    }
}

// ---------------------------------------------------------------------------
// Units

std::string_view default_unit_table_text() {
    return R"(# alias=canonical, one pair per line; lookups are case-insensitive
mah=mah
wh=wh
w=w
watt=w
watts=w
kw=kw
v=v
volt=v
volts=v
a=a
hz=hz
khz=khz
mhz=mhz
ghz=ghz
mp=mp
megapixel=mp
megapixels=mp
kb=kb
mb=mb
gb=gb
tb=tb
mm=mm
cm=cm
m=m
km=km
in=inch
inch=inch
inches=inch
"=inch
g=g
gram=g
grams=g
kg=kg
l=l
litre=l
litres=l
liter=l
liters=l
ml=ml
db=db
%=%
fps=fps
nit=nits
nits=nits
h=h
hr=h
hrs=h
hour=h
hours=h
min=min
mins=min
minute=min
minutes=min
s=s
sec=s
secs=s
ms=ms
mbps=mbps
gbps=gbps
ppi=ppi
x=x
p=p
year=year
years=year
month=month
months=month
gbp=gbp
£=gbp
usd=usd
$=usd
eur=eur
€=eur
)";
}

UnitTable UnitTable::parse(std::string_view text_in) {
    UnitTable table;
    for (const auto& line_raw : text::split_lines(text_in)) {
        auto line = text::trim(line_raw);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.rfind('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == line.size()) {
            throw NormalizeError("malformed unit alias line: " + line);
        }
        auto alias = text::to_lower(text::trim(line.substr(0, eq)));
        auto canon = text::to_lower(text::trim(line.substr(eq + 1)));
        table.aliases_[alias] = canon;
        table.aliases_.try_emplace(canon, canon);
    }
    return table;
}

UnitTable UnitTable::load(const std::string& path) { return parse(text::read_file(path)); }

const UnitTable& UnitTable::defaults() {
    static const UnitTable table = parse(default_unit_table_text());
    return table;
}

std::string UnitTable::normalize(std::string_view unit) const {
    auto key = text::to_lower(text::trim(unit));
    auto it = aliases_.find(key);
    return it == aliases_.end() ? key : it->second;
}

bool UnitTable::is_known(std::string_view unit) const {
    return aliases_.count(text::to_lower(unit)) > 0;
}

std::string normalize_unit(std::string_view unit, const UnitTable& table) {
    return table.normalize(unit);
}

// ---------------------------------------------------------------------------
// Quantities

namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) {
    auto u = static_cast<unsigned char>(c);
    return u < 128 && std::isalpha(u) != 0;
}

struct NumberSpan {
    double value = 0;
    std::size_t end = 0;
};

// Digits with commas between digits treated as grouping and an optional
// '.'-fraction.
NumberSpan read_number(std::string_view s, std::size_t i) {
    std::string digits;
    bool seen_dot = false;
    while (i < s.size()) {
        char c = s[i];
        if (is_digit(c)) {
            digits.push_back(c);
            ++i;
        } else if (c == ',' && !digits.empty() && i + 1 < s.size() && is_digit(s[i + 1]) &&
                   !seen_dot) {
            ++i;
        } else if (c == '.' && !seen_dot && i + 1 < s.size() && is_digit(s[i + 1])) {
            seen_dot = true;
            digits.push_back('.');
            ++i;
        } else {
            break;
        }
    }
    return {std::strtod(digits.c_str(), nullptr), i};
}

std::size_t skip_spaces(std::string_view s, std::size_t i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return i;
}

// Length of a dimension separator ('x', 'X', '*', U+00D7) at i, else 0.
std::size_t times_sign(std::string_view s, std::size_t i) {
    if (i >= s.size()) return 0;
    if (s[i] == 'x' || s[i] == 'X' || s[i] == '*') return 1;
    if (s.substr(i, 2) == "\xC3\x97") return 2;
    return 0;
}

struct UnitScan {
    enum class Kind { None, Unit, Label } kind = Kind::None;
    std::string unit;
    std::size_t end = 0;
};

UnitScan scan_unit(std::string_view s, std::size_t i, const UnitTable& table) {
    UnitScan out;
    out.end = i;
    std::size_t k = i;
    bool attached = true;
    if (k < s.size() && s[k] == ' ') {
        attached = false;
        ++k;
    }
    std::size_t b = k;
    if (k < s.size() && (s[k] == '%' || s[k] == '"')) {
        ++k;
    } else {
        while (k < s.size() && is_alpha(s[k])) ++k;
    }
    if (k == b) return out;
    std::string_view token = s.substr(b, k - b);
    bool followed_by_word = k < s.size() && (std::isalnum(static_cast<unsigned char>(s[k])) ||
                                             s[k] == '/' || s[k] == '-');
    if (attached) {
        // "5G", "8K", "S25"-style labels: the number is part of a name.
        if (token == "G" || token == "K" || followed_by_word || !table.is_known(token)) {
            out.kind = UnitScan::Kind::Label;
            out.end = k;
            return out;
        }
    } else if (followed_by_word || !table.is_known(token)) {
        return out;
    }
    out.kind = UnitScan::Kind::Unit;
    out.unit = table.normalize(token);
    out.end = k;
    return out;
}

std::optional<std::string> currency_prefix(std::string_view s, std::size_t num_start) {
    std::size_t p = num_start;
    while (p > 0 && s[p - 1] == ' ') --p;
    if (p >= 2 && s.substr(p - 2, 2) == "\xC2\xA3") return "gbp";
    if (p >= 3 && s.substr(p - 3, 3) == "\xE2\x82\xAC") return "eur";
    if (p >= 1 && s[p - 1] == '$') return "usd";
    if (p >= 3 && text::to_lower(s.substr(p - 3, 3)) == "gbp" && (p == 3 || !is_alpha(s[p - 4])))
        return "gbp";
    return std::nullopt;
}

// A minus attached to the number and not following a word or digit, so
// "-3 dB" is negative while "SM-S931" and "5-6" are not.
bool negated(std::string_view s, std::size_t num_start) {
    std::size_t sign = 0;
    if (num_start >= 1 && s[num_start - 1] == '-') {
        sign = 1;
    } else if (num_start >= 3 && s.substr(num_start - 3, 3) == "\xE2\x88\x92") {
        sign = 3;
    } else {
        return false;
    }
    std::size_t before = num_start - sign;
    return before == 0 || !std::isalnum(static_cast<unsigned char>(s[before - 1]));
}

}  // namespace

std::optional<Quantity> parse_quantity(std::string_view raw, const UnitTable& table) {
    std::size_t i = 0;
    while (i < raw.size()) {
        if (!is_digit(raw[i])) {
            ++i;
            continue;
        }
        if (i > 0) {
            char prev = raw[i - 1];
            if (is_alpha(prev) || prev == '.' || prev == '_') {
                while (i < raw.size() && (is_digit(raw[i]) || raw[i] == '.')) ++i;
                continue;
            }
        }
        std::size_t start = i;
        auto first = read_number(raw, i);

        // Dimensional: N x M [x K]
        std::vector<double> dims{first.value};
        std::size_t pos = first.end;
        while (dims.size() < 3) {
            std::size_t k = skip_spaces(raw, pos);
            std::size_t t = times_sign(raw, k);
            if (t == 0) break;
            k = skip_spaces(raw, k + t);
            if (k >= raw.size() || !is_digit(raw[k])) break;
            auto next = read_number(raw, k);
            dims.push_back(next.value);
            pos = next.end;
        }

        Quantity q;
        q.raw = std::string(raw);
        auto unit = scan_unit(raw, pos, table);
        if (dims.size() >= 2) {
            q.dims = std::move(dims);
            if (unit.kind == UnitScan::Kind::Unit) q.unit = unit.unit;
            return q;
        }
        if (unit.kind == UnitScan::Kind::Label) {
            i = unit.end;
            continue;
        }
        q.value = negated(raw, start) ? -first.value : first.value;
        if (auto cur = currency_prefix(raw, start)) {
            q.unit = *cur;
        } else if (unit.kind == UnitScan::Kind::Unit) {
            q.unit = unit.unit;
        }
        return q;
    }
    return std::nullopt;
}

}  // namespace dualgraph
