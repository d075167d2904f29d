#include <set>

#include "dualgraph/llm.hpp"
#include "dualgraph/normalize.hpp"
#include "dualgraph/text.hpp"

namespace dualgraph::llm {

std::string wrap_fenced(std::string_view query, std::string_view lang) {
    std::string out = "```";
    out += lang;
    out += '\n';
    out += query;
    out += "\n```";
    return out;
}

std::optional<std::string> extract_fenced_block(std::string_view text) {
    auto open = text.find("```");
    if (open == std::string_view::npos) return std::nullopt;
    auto nl = text.find('\n', open + 3);
    if (nl == std::string_view::npos) return std::nullopt;
    // The info string may only name a language.
    for (auto c : text.substr(open + 3, nl - open - 3))
        if (c == ' ' || c == '{' || c == '`') return std::nullopt;
    auto body = nl + 1;
    if (text.substr(body, 3) == "```") return std::string();
    auto close = text.find("\n```", body);
    if (close == std::string_view::npos) return std::nullopt;
    return std::string(text.substr(body, close - body));
}

std::string schema_text() {
    return R"(Prefixes: skg: for nodes and properties, skgt: for classes, rdf: and xsd: as usual.
Classes: skgt:Category, skgt:ProductRange, skgt:Product, skgt:Spec, skgt:Section, skgt:Entry,
skgt:Value, skgt:Feature.
Properties:
  ?product skg:variantOf ?range        (Product to ProductRange, transitive)
  ?range skg:belongs ?category         (ProductRange to Category; inherited by its products)
  ?product skg:hasSpec ?spec           (one Spec node per specification-table row)
  ?spec skg:inSection ?section
  ?spec skg:inEntry ?entry
  ?spec skg:hasValue ?value            (one Value node per comma-separated fragment)
  ?product skg:hasFeature ?feature     (derived, e.g. skg:5g_support)
  ?product skg:hasPrice ?value         (derived from the Price entry)
  ?node skg:hasName "Display Name"     (every class except Spec)
Numeric values: a Spec whose value contains a number also carries
  ?spec skg:hasNumericValue ?n (xsd:decimal), skg:hasUnit "unit", and for
  dimensions skg:hasDim1, skg:hasDim2, skg:hasDim3.
Compare numbers with FILTER on skg:hasNumericValue, never on the value text.
Prices are in GBP: select the Spec with skg:inEntry skg:price and filter its
skg:hasNumericValue. Node ids are lowercase words joined by underscores.)";
}

std::string build_sparql_prompt(std::string_view question, const std::vector<PatternSnippet>& patterns,
                                std::string_view schema) {
    std::string p;
    p += "You are an expert in SPARQL, RDF, OWL and product knowledge graphs.\n\n";
    p += "<rules>\n";
    p += "Write one SELECT query. Use only basic graph patterns, FILTER (comparisons, &&, ||, !, IN, "
         "REGEX), DISTINCT, GROUP BY with COUNT/SUM/AVG/MIN/MAX, ORDER BY, LIMIT and OFFSET.\n";
    p += "Do not use OPTIONAL, UNION, MINUS, property paths or subqueries.\n";
    p += "Select the product variable first so the answer lists products.\n";
    p += "</rules>\n\n";
    p += "<domain>\n";
    p += "The graph describes consumer electronics: products, the ranges they belong to, product "
         "categories, and the rows of each product's specification table.\n";
    p += "</domain>\n\n";
    p += "<schema>\n";
    p += schema;
    p += "\n</schema>\n\n";
    p += "<format>\n";
    p += "Answer with a single fenced block starting with ```sparql and nothing else.\n";
    p += "</format>\n\n";
    p += "<patterns>\n";
    if (patterns.empty()) p += "(none)\n";
    for (const auto& pat : patterns) {
        p += "Pattern (" + pat.kind + "): " + pat.linearization + "\n";
        p += wrap_fenced(pat.snippet) + "\n";
    }
    p += "</patterns>\n\n";
    p += "<question>\n";
    p += question;
    p += "\n</question>";
    return p;
}

std::vector<std::string> generate_sparql_candidates(LlmClient& client, std::string_view qid,
                                                    std::string_view prompt,
                                                    const std::vector<Sampling>& sampling, Phase phase,
                                                    Trace* trace) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < sampling.size(); ++i) {
        PromptTag tag{"sparql", std::string(qid), static_cast<int>(i)};
        auto r = client.chat(tag, prompt, sampling[i], phase, trace);
        auto block = extract_fenced_block(r.text);
        if (block && !text::trim(*block).empty()) out.push_back(std::move(*block));
    }
    return out;
}

std::string build_route_prompt(std::string_view question) {
    std::string p;
    p += "Choose the retriever for a product question.\n\n";
    p += "<retrievers>\n";
    p += "SYMBOLIC: runs a SPARQL query over a knowledge graph of specification tables. Best for "
         "filtering by numbers or features, listing every matching product, counting and comparing.\n";
    p += "SEMANTIC: finds passages of product pages by entity similarity. Best for descriptive, "
         "open-ended or experience questions.\n";
    p += "</retrievers>\n\n";
    p += "<examples>\n";
    p += "Q: Which phones weigh less than 170 g?\nA: SYMBOLIC\n";
    p += "Q: List tablets with a 120Hz display.\nA: SYMBOLIC\n";
    p += "Q: What makes the Galaxy Watch good for runners?\nA: SEMANTIC\n";
    p += "Q: Is the Fold comfortable for reading e-books?\nA: SEMANTIC\n";
    p += "</examples>\n\n";
    p += "Reply with exactly one word: SYMBOLIC or SEMANTIC.\n\n";
    p += "<question>\n";
    p += question;
    p += "\n</question>";
    return p;
}

Route parse_route(std::string_view response) {
    auto words = text::alnum_tokens(response);
    if (words.size() == 1 && words[0] == "symbolic") return Route::Symbolic;
    return Route::Semantic;
}

Route route(LlmClient& client, std::string_view qid, std::string_view question, Phase phase, Trace* trace) {
    auto r = client.chat({"route", std::string(qid), 0}, build_route_prompt(question), {}, phase, trace);
    return parse_route(r.text);
}

std::string build_answer_prompt(std::string_view question, std::string_view context) {
    std::string p;
    p += "Answer the question using only the context. When the context contains result tables, "
         "list every product they contain.\n\n";
    p += "<context>\n";
    p += context.empty() ? std::string(kNoEvidence) : std::string(context);
    p += "\n</context>\n\n";
    p += "<question>\n";
    p += question;
    p += "\n</question>";
    return p;
}

ChatResult generate_answer(LlmClient& client, std::string_view qid, std::string_view question,
                           std::string_view context, Phase phase, Trace* trace) {
    return client.chat({"answer", std::string(qid), 0}, build_answer_prompt(question, context), {}, phase, trace);
}

std::string build_symbolic_prompt(std::string_view question, std::string_view answer) {
    std::string p;
    p += "Extract the product names the answer gives as its answer to the question. Write one name "
         "per line and nothing else. Write NONE when it names no product.\n\n";
    p += "<question>\n";
    p += question;
    p += "\n</question>\n\n";
    p += "<answer>\n";
    p += answer;
    p += "\n</answer>";
    return p;
}

std::vector<std::string> parse_symbolic_answer(std::string_view response) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& raw : text::split_lines(response)) {
        auto line = text::trim(raw);
        if (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0) line = text::trim(line.substr(2));
        if (line.empty() || text::to_upper(line) == "NONE") continue;
        auto id = try_canonical_id(line);
        if (id && seen.insert(id->str()).second) out.push_back(id->str());
    }
    return out;
}

std::vector<std::string> extract_symbolic_answer(LlmClient& client, std::string_view qid,
                                                 std::string_view question, std::string_view answer,
                                                 Phase phase, Trace* trace) {
    if (text::trim(answer).empty()) return {};
    auto r = client.chat({"symbolic", std::string(qid), 0}, build_symbolic_prompt(question, answer), {}, phase,
                         trace);
    return parse_symbolic_answer(r.text);
}

std::string build_entity_prompt(std::string_view chunk_text) {
    std::string p;
    p += "List the named entities in the text: products, product ranges, features and technologies. "
         "Write one entity per line as `name :: short description`, using only facts from the text. "
         "Write NONE when there are none.\n\n";
    p += "<text>\n";
    p += chunk_text;
    p += "\n</text>";
    return p;
}

std::optional<std::vector<Mention>> parse_mentions(std::string_view response) {
    std::vector<Mention> out;
    auto trimmed = text::trim(response);
    if (trimmed.empty() || text::to_upper(trimmed) == "NONE") return out;
    for (const auto& raw : text::split_lines(response)) {
        auto sep = raw.find("::");
        if (sep == std::string::npos) continue;
        auto name = text::trim(std::string_view(raw).substr(0, sep));
        auto desc = text::trim(std::string_view(raw).substr(sep + 2));
        if (name.rfind("- ", 0) == 0) name = text::trim(name.substr(2));
        if (name.empty() || desc.empty() || !try_canonical_id(name)) continue;
        out.push_back({name, desc});
    }
    if (out.empty()) return std::nullopt;
    return out;
}

std::string build_agent_prompt(std::string_view question, std::string_view context, std::string_view history,
                               std::size_t step, std::size_t max_steps) {
    std::string p;
    p += "You answer product questions by choosing one action per step.\n\n";
    p += "<actions>\n";
    p += "RETRIEVE_SYMBOLIC: <query>   query the specification knowledge graph\n";
    p += "RETRIEVE_SEMANTIC: <query>   search product page passages\n";
    p += "ANSWER: <text>               give the final answer\n";
    p += "REVISE: <text>               replace the previous answer\n";
    p += "STOP                         end without further action\n";
    p += "</actions>\n\n";
    p += "Step " + std::to_string(step + 1) + " of " + std::to_string(max_steps) + ". Reply with one action line.\n\n";
    p += "<history>\n";
    p += history.empty() ? std::string("(none)") : std::string(history);
    p += "\n</history>\n\n";
    p += "<context>\n";
    p += context.empty() ? std::string(kNoEvidence) : std::string(context);
    p += "\n</context>\n\n";
    p += "<question>\n";
    p += question;
    p += "\n</question>";
    return p;
}

std::string build_reflect_prompt(std::string_view question, std::string_view context, std::string_view answer) {
    std::string p;
    p += "Check whether the answer is supported by the context and fully answers the question. "
         "Reply ACCEPT or REJECT.\n\n";
    p += "<context>\n";
    p += context.empty() ? std::string(kNoEvidence) : std::string(context);
    p += "\n</context>\n\n";
    p += "<answer>\n";
    p += answer;
    p += "\n</answer>\n\n";
    p += "<question>\n";
    p += question;
    p += "\n</question>";
    return p;
}

std::string build_decompose_prompt(std::string_view text) {
    std::string p;
    p += "Break the text into short, self-contained factual claims. Write one claim per line "
         "starting with \"- \". Write NONE when it makes no claim.\n\n";
    p += "<text>\n";
    p += text;
    p += "\n</text>";
    return p;
}

std::string build_verify_prompt(const std::vector<std::string>& claims, std::string_view reference) {
    std::string p;
    p += "For each numbered claim decide whether the reference supports it. Reply with one line per "
         "claim: `<number>: SUPPORTED` or `<number>: UNSUPPORTED`.\n\n";
    p += "<claims>\n";
    for (std::size_t i = 0; i < claims.size(); ++i) p += std::to_string(i + 1) + ". " + claims[i] + "\n";
    if (!claims.empty()) p.pop_back();
    p += "\n</claims>\n\n";
    p += "<reference>\n";
    p += reference;
    p += "\n</reference>";
    return p;
}

std::string build_judge_prompt(std::string_view question, std::string_view answer_a, std::string_view answer_b) {
    std::string p;
    p += "Two assistants answered the same product question. Decide which answer is more correct, "
         "complete and helpful. Reply with exactly one letter: A or B.\n\n";
    p += "<question>\n";
    p += question;
    p += "\n</question>\n\n";
    p += "<answer_a>\n";
    p += answer_a;
    p += "\n</answer_a>\n\n";
    p += "<answer_b>\n";
    p += answer_b;
    p += "\n</answer_b>";
    return p;
}

}  // namespace dualgraph::llm
