#include "uwbloc/random.hpp"

#include <vector>

namespace uwbloc {

Rng RandomStreams::stream(std::string_view name) const {
  std::vector<std::uint32_t> material;
  material.reserve(name.size() + 2);
  material.push_back(static_cast<std::uint32_t>(seed_ & 0xffffffffu));
  material.push_back(static_cast<std::uint32_t>(seed_ >> 32));
  for (char c : name) material.push_back(static_cast<unsigned char>(c));
  std::seed_seq seq(material.begin(), material.end());
  return Rng(seq);
}

}  // namespace uwbloc
