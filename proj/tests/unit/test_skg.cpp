#include <gtest/gtest.h>

#include <random>

#include "dualgraph/skg.hpp"
#include "generators.hpp"

using namespace dualgraph;

namespace {

Term n(std::string_view id) { return Term::iri(vocab::node(id)); }

Corpus one_product(StructuredComponent c) {
    Document d;
    d.id = "page";
    d.structured = std::vector<StructuredComponent>{std::move(c)};
    return {d};
}

}  // namespace

TEST(Vocab, NodeAndLocalName) {
    EXPECT_EQ(vocab::node("abc"), "skg:abc");
    EXPECT_EQ(vocab::local_name("skgt:Product"), "Product");
    EXPECT_EQ(Term::iri("skg:yes").str(), "yes");
    EXPECT_EQ(Term::string("Yes").str(), "Yes");
    EXPECT_EQ(Term::decimal(2.5).str(), "2.5");
}

TEST(Graph, InsertAddsClosureTypes) {
    Graph g;
    EXPECT_EQ(g.insert(n("p"), vocab::kHasSpec, n("s")), 3u);
    EXPECT_TRUE(g.has_class(n("p"), vocab::kProduct));
    EXPECT_TRUE(g.has_class(n("s"), vocab::kSpec));
    EXPECT_EQ(g.insert(n("p"), vocab::kHasSpec, n("s")), 0u);
    EXPECT_EQ(g.size(), 3u);

    // No range typing for literal objects or undeclared endpoints.
    EXPECT_EQ(g.insert(n("s"), vocab::kHasNumericValue, Term::decimal(3)), 1u);
    EXPECT_EQ(g.insert(n("p"), vocab::kHasName, Term::string("P")), 1u);
    EXPECT_EQ(g.name_of(n("p")), "P");
    EXPECT_FALSE(g.name_of(n("s")));
}

TEST(Graph, SchemaErrors) {
    Graph g;
    EXPECT_THROW(g.insert(Term::string("lit"), vocab::kHasName, Term::string("x")), SchemaError);
    EXPECT_THROW(g.insert(n("a"), "skg:unknownPredicate", n("b")), SchemaError);
    EXPECT_THROW(g.insert(Triple{n("a"), Term::string("skg:hasName"), n("b")}), SchemaError);
    EXPECT_EQ(g.size(), 0u);
}

TEST(Graph, MatchAgreesWithScan) {
    oracle::Rng rng(5);
    for (int round = 0; round < 20; ++round) {
        Graph g = oracle::random_product_graph(rng, 60);
        auto all = g.triples();
        std::vector<std::optional<TermId>> choices = {std::nullopt};
        for (int i = 0; i < 4 && !all.empty(); ++i) {
            const auto& t = all[rng() % all.size()];
            choices.push_back(g.find(t.subject));
            choices.push_back(g.find(t.predicate));
            choices.push_back(g.find(t.object));
        }
        for (int q = 0; q < 30; ++q) {
            auto s = choices[rng() % choices.size()];
            auto p = choices[rng() % choices.size()];
            auto o = choices[rng() % choices.size()];
            std::set<IdTriple> expected;
            for (const auto& t : g.spo())
                if ((!s || t[0] == *s) && (!p || t[1] == *p) && (!o || t[2] == *o)) expected.insert(t);
            auto got = g.match(s, p, o);
            EXPECT_EQ(std::set<IdTriple>(got.begin(), got.end()), expected);
            EXPECT_EQ(got.size(), expected.size());
            EXPECT_EQ(g.count(s, p, o), expected.size());
        }
    }
}

TEST(Serialize, RoundTrip) {
    Graph g;
    g.insert(n("p"), vocab::kHasName, Term::string("Quote \" and \\ slash\nnewline"));
    g.insert(n("s"), vocab::kHasNumericValue, Term::decimal(-2.5));
    g.insert(n("s"), vocab::kHasDim1, Term::decimal(1e6));
    g.insert(n("p"), vocab::kHasSpec, n("s"));
    auto text = serialize_graph(g);
    auto back = parse_graph(text);
    EXPECT_TRUE(back.same_triples(g));
    EXPECT_EQ(serialize_graph(back), text);

    oracle::Rng rng(9);
    for (int i = 0; i < 10; ++i) {
        auto r = oracle::random_product_graph(rng, 80);
        EXPECT_TRUE(parse_graph(serialize_graph(r)).same_triples(r));
    }
}

TEST(Serialize, RejectsMalformed) {
    EXPECT_THROW(parse_graph("<skg:a> <skg:hasName> \"open .\n"), SchemaError);
    EXPECT_THROW(parse_graph("<skg:a> <skg:nope> <skg:b> .\n"), SchemaError);
    EXPECT_THROW(parse_graph("<skg:a> <skg:hasNumericValue> \"x1\"^^xsd:decimal .\n"), SchemaError);
}

TEST(SplitValueFragments, CommasBetweenDigitsStay) {
    EXPECT_EQ(split_value_fragments("5G Sub6 FDD, 4G LTE TDD"),
              (std::vector<std::string>{"5G Sub6 FDD", "4G LTE TDD"}));
    EXPECT_EQ(split_value_fragments("1,299 g"), (std::vector<std::string>{"1,299 g"}));
    EXPECT_EQ(split_value_fragments(" a ,, b ,"), (std::vector<std::string>{"a", "b"}));
    EXPECT_TRUE(split_value_fragments("").empty());
}

TEST(BuildSkg, ProductLayout) {
    StructuredComponent c;
    c.product_name = "Galaxy S25";
    c.range_name = "Galaxy S";
    c.categories = {"Smartphones"};
    c.rows = {{"Display", "Size", "6.2\""},
              {"Network", "Bands", "5G Sub6 FDD, 4G LTE TDD"},
              {"Specifications", "Dimensions", "146.9 x 70.5 x 7.2 mm"},
              {"Specifications", "Empty", "!!!"}};
    BuildDiagnostics diag;
    Graph g = build_skg(one_product(c), Ontology::standard(), &diag);

    auto p = n("galaxy_s25");
    auto r = n("galaxy_s");
    EXPECT_TRUE(g.has_class(p, vocab::kProduct));
    EXPECT_TRUE(g.has_class(r, vocab::kProductRange));
    EXPECT_EQ(g.objects(p, vocab::kVariantOf), std::vector<Term>{r});
    EXPECT_EQ(g.objects(r, vocab::kBelongs), std::vector<Term>{n("smartphones")});
    EXPECT_TRUE(g.has_class(n("smartphones"), vocab::kCategory));

    auto specs = g.objects(p, vocab::kHasSpec);
    ASSERT_EQ(specs.size(), 3u);
    ASSERT_EQ(diag.messages.size(), 1u);

    auto s0 = n("galaxy_s25__spec0");
    EXPECT_EQ(g.objects(s0, vocab::kInSection), std::vector<Term>{n("display")});
    EXPECT_EQ(g.objects(s0, vocab::kHasNumericValue), std::vector<Term>{Term::decimal(6.2)});
    EXPECT_EQ(g.objects(s0, vocab::kHasUnit), std::vector<Term>{Term::string("inch")});

    auto s1 = n("galaxy_s25__spec1");
    EXPECT_EQ(g.objects(s1, vocab::kHasValue).size(), 2u);
    EXPECT_TRUE(g.has_class(n("5g_sub6_fdd"), vocab::kValue));
    EXPECT_EQ(g.name_of(n("4g_lte_tdd")), "4G LTE TDD");

    auto s2 = n("galaxy_s25__spec2");
    EXPECT_EQ(g.objects(s2, vocab::kHasDim1), std::vector<Term>{Term::decimal(146.9)});
    EXPECT_EQ(g.objects(s2, vocab::kHasDim3), std::vector<Term>{Term::decimal(7.2)});
    EXPECT_EQ(g.objects(s2, vocab::kHasUnit), std::vector<Term>{Term::string("mm")});
}

TEST(BuildSkg, ProductWithoutRangeIsItsOwnRange) {
    StructuredComponent c;
    c.product_name = "Solo";
    Graph g = build_skg(one_product(c));
    EXPECT_TRUE(g.has_class(n("solo"), vocab::kProductRange));
    EXPECT_EQ(g.objects(n("solo"), vocab::kVariantOf), std::vector<Term>{n("solo")});
}

TEST(BuildSkg, UnusableNamesAreDiagnosed) {
    StructuredComponent c;
    c.product_name = "***";
    BuildDiagnostics diag;
    Graph g = build_skg(one_product(c), Ontology::standard(), &diag);
    EXPECT_EQ(g.size(), 0u);
    EXPECT_EQ(diag.messages.size(), 1u);
}

TEST(Stats, CountsClassesAndPredicates) {
    Graph g;
    g.insert(n("p"), vocab::kHasSpec, n("s"));
    g.insert(n("q"), vocab::kHasSpec, n("s"));
    auto st = stats(g);
    EXPECT_EQ(st.triples, 5u);
    EXPECT_EQ(st.per_class.at(std::string(vocab::kProduct)), 2u);
    EXPECT_EQ(st.per_class.at(std::string(vocab::kSpec)), 1u);
    EXPECT_EQ(st.per_predicate.at(std::string(vocab::kHasSpec)), 2u);
}
