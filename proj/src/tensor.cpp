#include "ssvep/tensor.hpp"

#include <cmath>
#include <string>

#include "ssvep/errors.hpp"

namespace ssvep {

Tensor::Tensor(std::vector<std::size_t> s, bool req_grad)
    : shape(std::move(s)), requires_grad(req_grad) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  values.assign(n, 0.0);
  if (requires_grad) grad.assign(n, 0.0);
}

void Tensor::ensure_grad() {
  requires_grad = true;
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() {
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

void Tensor::check_finite(const char* what) const {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value in ") + what);
    }
  }
}

}  // namespace ssvep
