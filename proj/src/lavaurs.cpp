#include "implab/lavaurs.hpp"

#include "implab/parallel.hpp"

namespace implab {

Point lavaurs_eval(const LavaursMap& L, const Point& z) {
  if (!L.engine) throw InvalidInput("Lavaurs map has no Fatou engine");
  return L.engine->psi_o(L.twist(L.engine->incoming(z)));
}

FunctionalCheckReport lavaurs_functional_check(const LavaursMap& L, std::span<const Point> sample, int threads) {
  FunctionalCheckReport rep;
  rep.points.resize(sample.size());
  parallel_for(sample.size(), threads, [&](size_t i) {
    FunctionalCheckPoint& p = rep.points[i];
    p.index = i;
    try {
      const FatouEngine& e = *L.engine;
      const Point Lz = lavaurs_eval(L, sample[i]);
      p.image = Lz;
      const Point gLz = e.step(Lz);
      p.commutation = (gLz - lavaurs_eval(L, e.step(sample[i]))).norm();
      p.phase = (gLz - lavaurs_eval(L.shifted(1.0), sample[i])).norm();
    } catch (const Error& err) {
      p.failure = describe(err);
    }
  });
  for (const auto& p : rep.points) {
    if (!p.failure.empty()) {
      rep.failures.push_back(p.index);
      continue;
    }
    rep.sup_commutation = std::max(rep.sup_commutation, p.commutation);
    rep.sup_phase = std::max(rep.sup_phase, p.phase);
  }
  return rep;
}

}  // namespace implab
