#include "dfm/basis.hpp"

#include "dfm/error.hpp"

namespace dfm {

BasisIndex encode(std::span<const Spin> config) {
  require(!config.empty() && config.size() <= kMaxSites, "configuration length out of range");
  BasisIndex s = 0;
  for (std::size_t k = 0; k < config.size(); ++k)
    if (config[k] == Spin::up) s |= BasisIndex{1} << k;
  return s;
}

std::vector<Spin> decode(BasisIndex index, int num_sites) {
  require(num_sites >= 1 && num_sites <= kMaxSites, "site count out of range");
  require(index < basis_dim(num_sites), "basis index out of range");
  std::vector<Spin> config(num_sites);
  for (int i = 1; i <= num_sites; ++i) config[i - 1] = is_up(index, i) ? Spin::up : Spin::down;
  return config;
}

std::vector<Spin> parse_config(std::string_view text) {
  std::vector<Spin> config;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c == '0' || c == 'd' || c == 'D') {
      config.push_back(Spin::down);
      ++pos;
    } else if (c == '1' || c == 'u' || c == 'U') {
      config.push_back(Spin::up);
      ++pos;
    } else if (text.substr(pos, 3) == "↑") {
      config.push_back(Spin::up);
      pos += 3;
    } else if (text.substr(pos, 3) == "↓") {
      config.push_back(Spin::down);
      pos += 3;
    } else {
      fail(ErrorKind::invalid_argument, "unrecognized spin label in '" + std::string(text) + "'");
    }
  }
  return config;
}

std::string format_config(BasisIndex index, int num_sites) {
  std::string out(num_sites, '0');
  for (int i = 1; i <= num_sites; ++i)
    if (is_up(index, i)) out[i - 1] = '1';
  return out;
}

}  // namespace dfm
