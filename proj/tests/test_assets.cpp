#include <doctest.h>

#include <string>

#include "dsim/artifacts.hpp"
#include "dsim/prompts.hpp"
#include "dsim/rubrics.hpp"
#include "dsim/util.hpp"

using namespace dsim;

namespace {
const std::string kRepo = DSIM_REPO_DIR;
}

// The files under assets/ are generated from the embedded defaults so that
// users can read them and use them as override-directory starting points.
// These checks keep them byte-identical with the code; regenerate the files
// whenever an embedded template or schema changes.

TEST_CASE("prompt asset files mirror the embedded templates byte for byte") {
  for (const auto& [name, text] : PromptLibrary::embedded_defaults()) {
    CAPTURE(name);
    CHECK(read_file(kRepo + "/assets/prompts/" + name + ".txt") == text);
  }
}

TEST_CASE("rubric template and schema files mirror the registry") {
  const RubricRegistry registry = RubricRegistry::with_defaults();
  for (RubricId id : kAllRubrics) {
    const RubricDef& def = registry.get(id);
    const std::string stem = kRepo + "/assets/rubrics/" + to_string(id);
    CAPTURE(stem);
    CHECK(read_file(stem + ".txt") == def.prompt_template);
    CHECK(read_file(stem + ".schema.json") ==
          rubric_output_schema(def).dump(2) + "\n");
  }
}

TEST_CASE("checklist schema file mirrors the embedded schema") {
  CHECK(read_file(kRepo + "/assets/schemas/checklist.schema.json") ==
        kChecklistSchema);
}

TEST_CASE("prompt assets round-trip through the override loader unchanged") {
  PromptLibrary overridden = PromptLibrary::with_defaults();
  overridden.load_overrides(kRepo + "/assets/prompts");
  for (const auto& [name, text] : PromptLibrary::embedded_defaults())
    CHECK(overridden.get(name) == text);

  RubricRegistry registry = RubricRegistry::with_defaults();
  registry.load_template_overrides(kRepo + "/assets/rubrics");
  for (RubricId id : kAllRubrics)
    CHECK(registry.get(id).prompt_template ==
          RubricRegistry::with_defaults().get(id).prompt_template);
}
