#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dualgraph {

class NormalizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Canonical identifier over [a-z0-9_]: nonempty, no leading/trailing
// underscore, fixed point of canonical_id.
class CanonicalId {
public:
    CanonicalId() = default;
    const std::string& str() const { return id_; }
    bool operator==(const CanonicalId&) const = default;
    auto operator<=>(const CanonicalId&) const = default;

private:
    friend CanonicalId canonical_id(std::string_view name);
    explicit CanonicalId(std::string id) : id_(std::move(id)) {}
    std::string id_;
};

// Lowercases, splits on non-alphanumeric runs, drops stop words, applies a
// light plural stemmer to multi-word names and joins with '_'.
// Throws NormalizeError("empty identifier") when nothing survives.
CanonicalId canonical_id(std::string_view name);

// Same as canonical_id but returns nullopt instead of throwing.
std::optional<CanonicalId> try_canonical_id(std::string_view name);

// Plural suffix stripper used by canonical_id and the hash embedder.
std::string light_stem(std::string_view token);
bool is_stop_word(std::string_view token);

// Alias table mapping unit spellings to canonical units. Lookups are
// case-insensitive; unknown units normalize to their lowercase form.
class UnitTable {
public:
    static const UnitTable& defaults();
    static UnitTable parse(std::string_view text);
    static UnitTable load(const std::string& path);

    std::string normalize(std::string_view unit) const;
    bool is_known(std::string_view unit) const;
    const std::map<std::string, std::string>& aliases() const { return aliases_; }

private:
    std::map<std::string, std::string> aliases_;  // lowercase alias -> canonical
};

// Shipped alias table in "alias=canonical" line format.
std::string_view default_unit_table_text();

std::string normalize_unit(std::string_view unit, const UnitTable& table = UnitTable::defaults());

struct Quantity {
    std::optional<double> value;
    std::vector<double> dims;  // empty, or 2/3 components
    std::optional<std::string> unit;
    std::string raw;

    bool operator==(const Quantity&) const = default;
};

// Scalar ("5000 mAh", "£299.00", "up to 45W") or dimensional
// ("2160x1856", "75.6 x 161.9 x 7.4 mm") quantity; nullopt when the text
// carries no standalone number.
std::optional<Quantity> parse_quantity(std::string_view raw,
                                       const UnitTable& table = UnitTable::defaults());

}  // namespace dualgraph
