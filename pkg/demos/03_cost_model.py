"""Prefill cost savings from token reduction.

Estimates FLOPs, memory, and roofline prefill time for a 7B and a 13B
decoder at the full prompt (576 visual + 40 text tokens) versus the
reduced prompt (40 visual + 40 text), on V100-class hardware.
"""

from prumerge import cost_comparison, hardware_preset, model_preset

hw = hardware_preset("v100")
N_FULL, N_REDUCED = 576 + 40, 40 + 40

print(f"hardware: {hw.name} ({hw.peak_flops/1e12:.0f} TFLOP/s, "
      f"{hw.mem_bandwidth/1e9:.0f} GB/s)")
print()
header = f"{'model':8s} {'tokens':>7s} {'FLOPs (T)':>10s} {'time (ms)':>10s} " \
         f"{'total mem (G)':>14s} {'activations (G)':>16s}"
print(header)
for name in ("7b", "13b"):
    model = model_preset(name)
    full, reduced, savings = cost_comparison(model, hw, N_FULL, N_REDUCED)
    for label, r in (("full", full), ("reduced", reduced)):
        print(f"{name:8s} {r.n_tokens:7d} {r.flops_total/1e12:10.2f} "
              f"{r.prefill_time_s*1e3:10.1f} {r.total_memory_bytes/1e9:14.1f} "
              f"{r.activation_bytes/1e9:16.2f}")
    print(f"{'':8s} savings: flops x{1/savings['flops_ratio']:.1f}, "
          f"time x{1/savings['time_ratio']:.1f}, "
          f"memory x{1/savings['memory_ratio']:.2f}")
    print()

# INT4 weights change the memory picture but not the FLOP count.
int4 = model_preset("7b", bytes_per_param=0.5)
full, reduced, _ = cost_comparison(int4, hw, N_FULL, N_REDUCED)
print(f"7b int4 weights: total {full.total_memory_bytes/1e9:.1f} G full, "
      f"{reduced.total_memory_bytes/1e9:.1f} G reduced")
