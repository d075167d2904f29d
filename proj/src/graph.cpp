#include <algorithm>
#include <limits>

#include "dualgraph/skg.hpp"
#include "dualgraph/text.hpp"

namespace dualgraph {

namespace vocab {
std::string node(std::string_view canonical) { return "skg:" + std::string(canonical); }

std::string_view local_name(std::string_view iri) {
    auto colon = iri.find(':');
    return colon == std::string_view::npos ? iri : iri.substr(colon + 1);
}
}  // namespace vocab

Term Term::iri(std::string_view s) { return Term{TermKind::Iri, std::string(s), 0}; }
Term Term::string(std::string_view s) { return Term{TermKind::String, std::string(s), 0}; }
Term Term::decimal(double v) { return Term{TermKind::Decimal, text::format_decimal(v), v}; }

std::string Term::str() const {
    if (kind == TermKind::Iri) return std::string(vocab::local_name(text));
    return text;
}

std::string Term::to_string() const {
    switch (kind) {
        case TermKind::Iri:
            return "<" + text + ">";
        case TermKind::Decimal:
            return "\"" + text + "\"^^xsd:decimal";
        case TermKind::String: {
            std::string out = "\"";
            for (char c : text) {
                switch (c) {
                    case '"': out += "\\\""; break;
                    case '\\': out += "\\\\"; break;
                    case '\n': out += "\\n"; break;
                    case '\r': out += "\\r"; break;
                    case '\t': out += "\\t"; break;
                    default: out.push_back(c);
                }
            }
            return out + "\"";
        }
    }
    return text;
}

// ---------------------------------------------------------------------------

const Ontology& Ontology::standard() {
    static const Ontology onto = [] {
        Ontology o;
        for (auto c : {vocab::kCategory, vocab::kProductRange, vocab::kProduct, vocab::kSpec,
                       vocab::kSection, vocab::kEntry, vocab::kValue, vocab::kFeature,
                       vocab::kUtkgEntity, vocab::kSkgEntity}) {
            o.declare_class(std::string(c));
        }
        auto cls = [](std::string_view c) { return std::optional<std::string>(std::string(c)); };
        o.declare(std::string(vocab::kType));
        o.declare(std::string(vocab::kHasName));
        o.declare(std::string(vocab::kVariantOf));
        o.declare(std::string(vocab::kBelongs));
        o.declare(std::string(vocab::kHasDescription));
        o.declare(std::string(vocab::kHasSpec), {cls(vocab::kProduct), cls(vocab::kSpec)});
        o.declare(std::string(vocab::kInSection), {cls(vocab::kSpec), cls(vocab::kSection)});
        o.declare(std::string(vocab::kInEntry), {cls(vocab::kSpec), cls(vocab::kEntry)});
        o.declare(std::string(vocab::kHasValue), {cls(vocab::kSpec), cls(vocab::kValue)});
        o.declare(std::string(vocab::kHasFeature), {cls(vocab::kProduct), cls(vocab::kFeature)});
        o.declare(std::string(vocab::kHasNumericValue));
        o.declare(std::string(vocab::kHasDim1));
        o.declare(std::string(vocab::kHasDim2));
        o.declare(std::string(vocab::kHasDim3));
        o.declare(std::string(vocab::kHasUnit));
        o.declare(std::string(vocab::kHasPrice));
        return o;
    }();
    return onto;
}

bool Ontology::declares(std::string_view predicate) const { return predicates_.count(predicate) > 0; }

const Ontology::PredicateDecl* Ontology::find(std::string_view predicate) const {
    auto it = predicates_.find(predicate);
    return it == predicates_.end() ? nullptr : &it->second;
}

void Ontology::declare(std::string predicate, PredicateDecl decl) {
    predicates_[std::move(predicate)] = std::move(decl);
}

void Ontology::declare_class(std::string cls) {
    if (std::find(classes_.begin(), classes_.end(), cls) == classes_.end()) classes_.push_back(std::move(cls));
}

// ---------------------------------------------------------------------------

namespace {
std::string term_key(const Term& t) {
    std::string key(1, static_cast<char>('0' + static_cast<int>(t.kind)));
    key += t.text;
    return key;
}

constexpr TermId kMaxId = std::numeric_limits<TermId>::max();

template <typename F>
void scan_range(const std::set<IdTriple>& index, TermId a, std::optional<TermId> b, F&& f) {
    IdTriple lo{a, b.value_or(0), 0};
    IdTriple hi{a, b.value_or(kMaxId), kMaxId};
    for (auto it = index.lower_bound(lo); it != index.end() && !(hi < *it); ++it) f(*it);
}
}  // namespace

Graph::Graph() : Graph(Ontology::standard()) {}

Graph::Graph(const Ontology& ontology) : ontology_(&ontology) {}

TermId Graph::intern(const Term& t) {
    auto key = term_key(t);
    auto it = term_ids_.find(key);
    if (it != term_ids_.end()) return it->second;
    auto id = static_cast<TermId>(terms_.size());
    terms_.push_back(t);
    term_ids_.emplace(std::move(key), id);
    if (t.kind == TermKind::Iri && t.text == vocab::kType) type_id_ = id;
    return id;
}

std::optional<TermId> Graph::find(const Term& t) const {
    auto it = term_ids_.find(term_key(t));
    if (it == term_ids_.end()) return std::nullopt;
    return it->second;
}

void Graph::validate(const IdTriple& t) const {
    const Term& s = terms_[t[0]];
    const Term& p = terms_[t[1]];
    if (!s.is_iri()) throw SchemaError("literal in subject position: " + s.to_string());
    if (!p.is_iri()) throw SchemaError("literal in predicate position: " + p.to_string());
    if (!ontology_->declares(p.text)) throw SchemaError("undeclared predicate: " + p.text);
}

std::size_t Graph::insert_one(const IdTriple& t, std::vector<IdTriple>* added) {
    if (!spo_.insert(t).second) return 0;
    pos_.insert({t[1], t[2], t[0]});
    osp_.insert({t[2], t[0], t[1]});
    if (added) added->push_back(t);
    return 1;
}

std::size_t Graph::insert_ids(const IdTriple& t, std::vector<IdTriple>* added) {
    validate(t);
    std::size_t n = insert_one(t, added);
    if (const auto* decl = ontology_->find(terms_[t[1]].text)) {
        if (decl->domain || decl->range) {
            TermId type = intern(Term::iri(vocab::kType));
            if (decl->domain) n += insert_one({t[0], type, intern(Term::iri(*decl->domain))}, added);
            if (decl->range && terms_[t[2]].is_iri())
                n += insert_one({t[2], type, intern(Term::iri(*decl->range))}, added);
        }
    }
    return n;
}

std::size_t Graph::insert(const Triple& t) {
    if (!t.subject.is_iri()) throw SchemaError("literal in subject position: " + t.subject.to_string());
    if (!t.predicate.is_iri() || !ontology_->declares(t.predicate.text))
        throw SchemaError("undeclared predicate: " + t.predicate.text);
    IdTriple ids{intern(t.subject), intern(t.predicate), intern(t.object)};
    return insert_ids(ids);
}

std::size_t Graph::insert(const Term& s, std::string_view p, const Term& o) {
    return insert(Triple{s, Term::iri(p), o});
}

bool Graph::contains(const Triple& t) const {
    auto s = find(t.subject);
    auto p = find(t.predicate);
    auto o = find(t.object);
    return s && p && o && contains(IdTriple{*s, *p, *o});
}

void Graph::match(std::optional<TermId> s, std::optional<TermId> p, std::optional<TermId> o,
                  const std::function<void(const IdTriple&)>& visit) const {
    if (s && p && o) {
        IdTriple t{*s, *p, *o};
        if (spo_.count(t)) visit(t);
        return;
    }
    if (s) {
        if (o && !p) {
            scan_range(osp_, *o, s, [&](const IdTriple& r) { visit({r[1], r[2], r[0]}); });
        } else {
            scan_range(spo_, *s, p, [&](const IdTriple& r) { visit(r); });
        }
        return;
    }
    if (p) {
        scan_range(pos_, *p, o, [&](const IdTriple& r) { visit({r[2], r[0], r[1]}); });
        return;
    }
    if (o) {
        scan_range(osp_, *o, std::nullopt, [&](const IdTriple& r) { visit({r[1], r[2], r[0]}); });
        return;
    }
    for (const auto& t : spo_) visit(t);
}

std::vector<IdTriple> Graph::match(std::optional<TermId> s, std::optional<TermId> p,
                                   std::optional<TermId> o) const {
    std::vector<IdTriple> out;
    match(s, p, o, [&](const IdTriple& t) { out.push_back(t); });
    return out;
}

std::size_t Graph::count(std::optional<TermId> s, std::optional<TermId> p, std::optional<TermId> o) const {
    if (!s && !p && !o) return spo_.size();
    std::size_t n = 0;
    match(s, p, o, [&](const IdTriple&) { ++n; });
    return n;
}

std::vector<Triple> Graph::match_terms(const std::optional<Term>& s, const std::optional<Term>& p,
                                       const std::optional<Term>& o) const {
    std::optional<TermId> si, pi, oi;
    if (s) {
        si = find(*s);
        if (!si) return {};
    }
    if (p) {
        pi = find(*p);
        if (!pi) return {};
    }
    if (o) {
        oi = find(*o);
        if (!oi) return {};
    }
    std::vector<Triple> out;
    match(si, pi, oi, [&](const IdTriple& t) { out.push_back(resolve(t)); });
    return out;
}

std::vector<Term> Graph::objects(const Term& s, std::string_view p) const {
    std::vector<Term> out;
    for (auto& t : match_terms(s, Term::iri(p), std::nullopt)) out.push_back(t.object);
    return out;
}

std::vector<Term> Graph::subjects(std::string_view p, const Term& o) const {
    std::vector<Term> out;
    for (auto& t : match_terms(std::nullopt, Term::iri(p), o)) out.push_back(t.subject);
    return out;
}

std::set<std::string> Graph::classes_of(const Term& node) const {
    std::set<std::string> out;
    for (auto& c : objects(node, vocab::kType)) out.insert(c.text);
    return out;
}

bool Graph::has_class(const Term& node, std::string_view cls) const {
    auto s = find(node);
    auto t = find(Term::iri(vocab::kType));
    auto c = find(Term::iri(cls));
    return s && t && c && contains(IdTriple{*s, *t, *c});
}

std::optional<std::string> Graph::name_of(const Term& node) const {
    auto names = objects(node, vocab::kHasName);
    if (names.empty()) return std::nullopt;
    std::sort(names.begin(), names.end());
    return names.front().text;
}

Triple Graph::resolve(const IdTriple& t) const { return Triple{terms_[t[0]], terms_[t[1]], terms_[t[2]]}; }

std::vector<Triple> Graph::triples() const {
    std::vector<Triple> out;
    out.reserve(spo_.size());
    for (const auto& t : spo_) out.push_back(resolve(t));
    std::sort(out.begin(), out.end());
    return out;
}

bool Graph::same_triples(const Graph& other) const {
    if (size() != other.size()) return false;
    for (const auto& t : spo_) {
        if (!other.contains(resolve(t))) return false;
    }
    return true;
}

GraphStats stats(const Graph& g) {
    GraphStats st;
    st.triples = g.size();
    std::set<TermId> nodes;
    auto type = g.find(Term::iri(vocab::kType));
    for (const auto& t : g.spo()) {
        st.per_predicate[g.term(t[1]).text]++;
        nodes.insert(t[0]);
        if (g.term(t[2]).is_iri()) nodes.insert(t[2]);
        if (type && t[1] == *type) st.per_class[g.term(t[2]).text]++;
    }
    st.nodes = nodes.size();
    return st;
}

}  // namespace dualgraph
