#include <gtest/gtest.h>

#include "datalog_oracle.hpp"
#include "dualgraph/datalog.hpp"
#include "generators.hpp"

using namespace dualgraph;
using namespace dualgraph::datalog;

namespace {

Term n(std::string_view id) { return Term::iri(vocab::node(id)); }

}  // namespace

TEST(DatalogParse, DefaultRulesRoundTrip) {
    const auto& rules = default_rules();
    ASSERT_EQ(rules.size(), 7u);
    auto printed = print_rules(rules);
    EXPECT_EQ(parse_rules(printed), rules);
    EXPECT_EQ(print_rules(parse_rules(printed)), printed);
}

TEST(DatalogParse, RandomRulesRoundTrip) {
    oracle::Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        std::vector<Rule> rules = {oracle::random_rule(rng), oracle::random_rule(rng)};
        EXPECT_EQ(parse_rules(print_rules(rules)), rules) << print_rules(rules);
    }
}

TEST(DatalogParse, Structure) {
    auto rules = parse_rules(
        "# comment\n"
        "[?a, skg:belongs, ?c], [?a, a, skgt:Product] :- [?a, skg:variantOf, ?r], [?r, skg:belongs, ?c],\n"
        "  FILTER(?c != skg:x && REGEX(str(?a), \"Pro\")) .");
    ASSERT_EQ(rules.size(), 1u);
    const auto& r = rules[0];
    EXPECT_EQ(r.head.size(), 2u);
    EXPECT_EQ(r.head[1].p.constant, Term::iri("rdf:type"));
    EXPECT_EQ(r.body.size(), 2u);
    ASSERT_EQ(r.filters.size(), 1u);
    EXPECT_EQ(r.filters[0].op, FilterExpr::Op::And);
    ASSERT_EQ(r.filters[0].children.size(), 2u);
    EXPECT_EQ(r.filters[0].children[0].op, FilterExpr::Op::Ne);
    EXPECT_EQ(r.filters[0].children[1].op, FilterExpr::Op::Regex);
    EXPECT_EQ(r.filters[0].children[1].pattern, "Pro");
    EXPECT_EQ(variables_of(r), (std::vector<std::string>{"a", "r", "c"}));
}

TEST(DatalogParse, SyntaxErrorPosition) {
    try {
        parse_rules("[?a, skg:belongs, ?c] :-\n  [?a, skg:variantOf ?r] .");
        FAIL() << "expected a syntax error";
    } catch (const lex::SyntaxError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.col(), 22u);
    }
    EXPECT_THROW(parse_rules("[?a, skg:belongs, ?c] :- ."), lex::SyntaxError);
    EXPECT_THROW(parse_rules("[?a, skg:belongs, ?c] :- [?a, skg:belongs, ?c]"), lex::SyntaxError);
    EXPECT_THROW(parse_rules("[?a, foo:bar, ?c] :- [?a, skg:belongs, ?c] ."), std::exception);
}

TEST(DatalogParse, UnsafeRules) {
    EXPECT_THROW(parse_rules("[?a, skg:belongs, ?z] :- [?a, skg:variantOf, ?r] ."), DatalogError);
    EXPECT_THROW(parse_rules("[?a, skg:belongs, ?r] :- [?a, skg:variantOf, ?r], FILTER(?q = skg:x) ."),
                 DatalogError);
    Rule r;
    r.head.push_back({Slot::variable("x"), Slot::value(Term::iri("skg:belongs")), Slot::variable("y")});
    r.body.push_back({Slot::variable("x"), Slot::value(Term::iri("skg:variantOf")), Slot::variable("y")});
    EXPECT_NO_THROW(check_safe(r));
    r.head[0].o = Slot::variable("w");
    EXPECT_THROW(check_safe(r), DatalogError);
}

TEST(DatalogApply, InheritanceChain) {
    Graph g;
    g.insert(n("v1"), vocab::kVariantOf, n("r"));
    g.insert(n("v2"), vocab::kVariantOf, n("v1"));
    g.insert(n("r"), vocab::kBelongs, n("phones"));
    auto rules = parse_rules("[?p, skg:belongs, ?c] :- [?p, skg:variantOf, ?pr], [?pr, skg:belongs, ?c] .");
    ApplyStats st;
    Graph out = apply_rules(g, rules, {}, &st);
    EXPECT_TRUE(out.contains(Triple{n("v1"), Term::iri(vocab::kBelongs), n("phones")}));
    EXPECT_TRUE(out.contains(Triple{n("v2"), Term::iri(vocab::kBelongs), n("phones")}));
    EXPECT_EQ(st.derived, 2u);
    EXPECT_GE(st.iterations, 2u);
    EXPECT_EQ(g.size(), 3u) << "input graph must not change";
}

TEST(DatalogApply, SkipsUnusableHeads) {
    Graph g;
    g.insert(n("p"), vocab::kHasName, Term::string("P"));
    g.insert(n("p"), vocab::kBelongs, n("c"));
    // A literal subject and a predicate bound to a non-predicate node are
    // skipped; the third rule still fires.
    auto rules = parse_rules(
        "[?name, skg:hasName, ?name] :- [?p, skg:hasName, ?name] .\n"
        "[?p, ?c, ?p] :- [?p, skg:belongs, ?c] .\n"
        "[?c, skg:hasDescription, ?name] :- [?p, skg:belongs, ?c], [?p, skg:hasName, ?name] .");
    ApplyStats st;
    Graph out = apply_rules(g, rules, {}, &st);
    EXPECT_EQ(st.derived, 1u);
    EXPECT_TRUE(out.contains(Triple{n("c"), Term::iri(vocab::kHasDescription), Term::string("P")}));

    // An undeclared head predicate parses but is rejected against the ontology.
    EXPECT_THROW(apply_rules(g, parse_rules("[?p, skg:madeUp, ?c] :- [?p, skg:belongs, ?c] .")), DatalogError);
}

TEST(DatalogApply, FiltersOnFixture) {
    Graph g;
    g.insert(n("p"), vocab::kHasSpec, n("s1"));
    g.insert(n("s1"), vocab::kHasValue, n("5g_sub6_fdd"));
    g.insert(n("s1"), vocab::kInEntry, n("video_recording_resolution"));
    g.insert(n("q"), vocab::kHasSpec, n("s2"));
    g.insert(n("s2"), vocab::kHasValue, n("8K_at_30fps"));
    g.insert(n("s2"), vocab::kInEntry, n("video_recording_resolution"));
    Graph out = apply_rules(g, default_rules());
    auto feature = Term::iri(vocab::kHasFeature);
    EXPECT_TRUE(out.contains(Triple{n("p"), feature, n("5g_support")}));
    EXPECT_FALSE(out.contains(Triple{n("q"), feature, n("5g_support")}));
    // Regex match is case-insensitive.
    EXPECT_TRUE(out.contains(Triple{n("q"), feature, n("8k_recording_support")}));
    EXPECT_FALSE(out.contains(Triple{n("p"), feature, n("8k_recording_support")}));
    EXPECT_EQ(out.name_of(n("5g_support")), "5G Support");
    EXPECT_TRUE(out.has_class(n("p"), vocab::kSkgEntity));
}

TEST(DatalogApply, MatchesNaiveFixpoint) {
    oracle::Rng rng(123);
    int productive = 0;
    for (int i = 0; i < 40; ++i) {
        Graph g = oracle::random_product_graph(rng, 120);
        std::vector<Rule> rules = default_rules();
        for (int k = 0; k < 6; ++k) rules.push_back(oracle::random_rule(rng));
        ApplyOptions serial;
        serial.parallel = false;
        ApplyStats st;
        Graph semi = apply_rules(g, rules, {}, &st);
        Graph ser = apply_rules(g, rules, serial);
        Graph naive = oracle::naive_fixpoint(g, rules);
        ASSERT_TRUE(semi.same_triples(naive)) << print_rules(rules);
        ASSERT_TRUE(semi.same_triples(ser));
        EXPECT_EQ(st.derived, semi.size() - g.size());
        productive += st.derived > 0;

        ApplyStats again;
        EXPECT_TRUE(apply_rules(semi, rules, {}, &again).same_triples(semi));
        EXPECT_EQ(again.derived, 0u);
    }
    EXPECT_GE(productive, 20);
}
