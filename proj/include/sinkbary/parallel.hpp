#ifndef SINKBARY_PARALLEL_HPP
#define SINKBARY_PARALLEL_HPP

namespace sinkbary {

// Global worker count for the OpenMP kernels. Defaults to the hardware
// thread count; set_worker_count(1) forces serial execution everywhere.
// Results never depend on the worker count (kernels parallelize over
// independent output elements and accumulate partials in fixed order).
int worker_count();
void set_worker_count(int n);

} // namespace sinkbary

#endif
