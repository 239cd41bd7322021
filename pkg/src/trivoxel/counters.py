"""Global operation counters used by the benchmark harness and complexity tests."""

from dataclasses import dataclass, field


@dataclass
class OpCounters:
    """Running totals of the work performed by the hot paths.

    ``ssm_steps_forward`` / ``ssm_steps_backward`` count individual SSM
    timesteps per scan direction; a bidirectional pass over a length-M
    sequence adds M to each.
    """

    ssm_steps_forward: int = 0
    ssm_steps_backward: int = 0
    sparse_conv_active_out: int = 0
    submanifold_active_out: int = 0
    stage_seconds: dict = field(default_factory=dict)

    def reset(self):
        self.ssm_steps_forward = 0
        self.ssm_steps_backward = 0
        self.sparse_conv_active_out = 0
        self.submanifold_active_out = 0
        self.stage_seconds.clear()

    def as_dict(self):
        d = {
            "ssm_steps_forward": self.ssm_steps_forward,
            "ssm_steps_backward": self.ssm_steps_backward,
            "sparse_conv_active_out": self.sparse_conv_active_out,
            "submanifold_active_out": self.submanifold_active_out,
        }
        for k, v in self.stage_seconds.items():
            d[f"seconds_{k}"] = v
        return d


COUNTERS = OpCounters()
