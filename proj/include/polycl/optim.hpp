#pragma once

#include <vector>

#include "polycl/layers.hpp"

namespace polycl {

// Adam with the usual bias-corrected moments. State is keyed by position in
// the param list handed to the constructor, so the list must stay stable.
class Adam {
  public:
    explicit Adam(std::vector<Param*> params, float beta1 = 0.9f, float beta2 = 0.999f,
                  float eps = 1e-8f);

    void zero_grad();
    void step(float lr);

  private:
    std::vector<Param*> params_;
    std::vector<std::vector<float>> m_, v_;
    float beta1_, beta2_, eps_;
    long step_count_ = 0;
};

// Cosine annealing with warm restarts on an epoch grid: the learning rate
// returns to `peak` at the start of every period.
struct CosineWarmRestarts {
    float peak = 1e-4f;
    int period = 5;
    float floor = 0.f;

    float lr_at_epoch(int epoch) const;
};

}  // namespace polycl
