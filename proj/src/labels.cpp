#include <sstream>

#include "ttlcache/errors.hpp"
#include "ttlcache/map.hpp"

namespace ttl {

std::string encode_label(const StateLabel& l) {
  std::string out;
  for (std::size_t i = 0; i < l.caches.size(); ++i) {
    if (i) out += '.';
    const auto& c = l.caches[i];
    switch (c.kind) {
      case Sym::Out: out += '0'; break;
      case Sym::In: out += '1'; break;
      case Sym::Fetch: out += 'F' + std::to_string(c.phase); break;
    }
  }
  out += '|';
  for (std::size_t i = 0; i < l.arrivalPhases.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(l.arrivalPhases[i]);
  }
  return out;
}

StateLabel decode_label(const std::string& s) {
  auto bar = s.find('|');
  if (bar == std::string::npos) throw InvalidArgument("label without '|': " + s);
  StateLabel l;
  std::stringstream cs(s.substr(0, bar));
  std::string tok;
  while (std::getline(cs, tok, '.')) {
    if (tok == "0") l.caches.push_back(CacheSymbol::out());
    else if (tok == "1") l.caches.push_back(CacheSymbol::in());
    else if (tok.size() > 1 && tok[0] == 'F') {
      int k = 0;
      try {
        k = std::stoi(tok.substr(1));
      } catch (const std::logic_error&) {
        throw InvalidArgument("bad fetch phase in label: " + s);
      }
      if (k < 1) throw InvalidArgument("fetch phase must be >= 1: " + s);
      l.caches.push_back(CacheSymbol::fetch(k));
    } else {
      throw InvalidArgument("bad cache symbol '" + tok + "' in label: " + s);
    }
  }
  std::stringstream as(s.substr(bar + 1));
  while (std::getline(as, tok, ',')) {
    try {
      l.arrivalPhases.push_back(std::stoi(tok));
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad arrival phase in label: " + s);
    }
  }
  return l;
}

}  // namespace ttl
