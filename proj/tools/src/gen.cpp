// Copyright (c) 2026 The Lifelong Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <fstream>
#include <ostream>

#include "lifelong/cli/commands.hpp"

namespace lifelong::cli {

int cmd_gen(const std::optional<std::filesystem::path>& config, const std::filesystem::path& out,
            std::uint64_t seed_offset, std::ostream& log) {
  SyntheticConfig synth;
  try {
    if (config) {
      std::ifstream in(*config);
      if (!in) throw SpecError("cannot open config '" + config->string() + "'");
      const auto j = nlohmann::json::parse(in);
      if (j.contains("benchmark")) {
        const auto spec = parse_experiment_spec(j, config->parent_path());
        if (!spec.benchmark.synthetic) throw SpecError("gen: the spec's benchmark is not synthetic");
        synth = *spec.benchmark.synthetic;
      } else {
        synth = synthetic_from_json(j);
      }
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  synth.seed += seed_offset;
  try {
    const auto bench = gen_synthetic(synth);
    write_benchmark(bench, out);
    std::ofstream(out / "synthetic.json") << to_json(synth).dump(2) << "\n";
    log << "wrote " << bench.samples.size() << " samples over " << bench.relations->size() << " relations to "
        << out.string() << "\n";
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitOk;
}

}  // namespace lifelong::cli
