#include "gdlgen/minimal_grammar.hpp"

#include "gdlgen/earley.hpp"
#include "gdlgen/error.hpp"

namespace gdlgen {

Grammar extract_minimal(const Grammar& g, const TokenStream& ts) {
  auto use = derivation_rules(g, ts);
  Grammar current = g.subset(use.alts);
  current = Grammar(g.start(), current.alts(), false, current.provenance());

  for (bool removed = true; removed;) {
    removed = false;
    for (std::size_t i = current.size(); i-- > 0;) {
      Grammar candidate = current.without(i);
      if (recognize_partial(candidate, ts)) {
        current = std::move(candidate);
        removed = true;
      }
    }
  }

  // Keep provenance only for synthesized names that survived.
  std::map<std::string, std::string> provenance;
  for (const auto& name : current.defined_names())
    if (auto p = g.provenance().find(name); p != g.provenance().end()) provenance.insert(*p);
  return Grammar(g.start(), current.alts(), false, std::move(provenance));
}

std::vector<RuleAlt> check_minimality(const Grammar& gy, const Grammar& g, const TokenStream& ts) {
  for (const auto& alt : gy.alts())
    if (!g.contains(alt)) throw NotASubsetError("alternative not in reference grammar: " + render_alt(alt));
  if (!recognize_partial(gy, ts)) throw NotASentenceError("description is not derivable from the grammar");

  std::vector<RuleAlt> removable;
  for (std::size_t i = 0; i < gy.size(); ++i)
    if (recognize_partial(gy.without(i), ts)) removable.push_back(gy.alts()[i]);
  return removable;
}

}  // namespace gdlgen
