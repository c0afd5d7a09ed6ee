"""Built-in named kernels with their documented expected condition verdicts."""

from __future__ import annotations

from dataclasses import dataclass

from .kernels import (Kernel, compact_flat_kernel, compact_inflection_kernel,
                      exponential_kernel, polynomial_kernel)

__all__ = ["ZooEntry", "kernel_zoo", "zoo_kernel"]


@dataclass(frozen=True)
class ZooEntry:
    """A named kernel plus the condition verdicts it is expected to show."""

    name: str
    kernel: Kernel
    expect_nec: bool
    expect_exp_domination: bool
    comment: str

    def as_dict(self) -> dict:
        return {"name": self.name, "kernel": self.kernel.describe(),
                "expect_nec": self.expect_nec,
                "expect_exp_domination": self.expect_exp_domination,
                "comment": self.comment}


def kernel_zoo() -> list[ZooEntry]:
    """The shipped kernel collection used by the certification experiments."""
    return [
        ZooEntry(
            "exp-1", exponential_kernel(0.5, 1.0, b=1.0),
            expect_nec=True, expect_exp_domination=True,
            comment="mass-ratio condition holds with C = 1, delta = 1"),
        ZooEntry(
            "exp-slow", exponential_kernel(0.05, 0.1, b=1.0),
            expect_nec=True, expect_exp_domination=True,
            comment="slow exponential decay; C = 1, delta = 0.1"),
        ZooEntry(
            "poly-p125", polynomial_kernel(1.0, 4.0, b=1.0),
            expect_nec=False, expect_exp_domination=False,
            comment="(1+s)^-4: satisfies the pointwise power condition with "
                    "p = 1.25 yet has unbounded mass ratios"),
        ZooEntry(
            "poly-p140", polynomial_kernel(1.0, 2.5, b=1.0),
            expect_nec=False, expect_exp_domination=False,
            comment="(1+s)^-2.5: heavier tail, power condition with p = 1.4"),
        ZooEntry(
            "compact-flat", compact_flat_kernel(0.1, 1.5, 2.0, b=1.0),
            expect_nec=True, expect_exp_domination=False,
            comment="flat zone then C^1 ramp: mass-ratio condition holds "
                    "with C > 1, pointwise domination fails on the flat zone"),
        ZooEntry(
            "compact-inflection", compact_inflection_kernel(0.12, 2.0, 0.5, b=1.0),
            expect_nec=True, expect_exp_domination=False,
            comment="horizontal inflection point inside the support: "
                    "pointwise domination fails there, mass ratios stay fine"),
    ]


def zoo_kernel(name: str) -> Kernel:
    for entry in kernel_zoo():
        if entry.name == name:
            return entry.kernel
    known = ", ".join(e.name for e in kernel_zoo())
    raise KeyError(f"unknown zoo kernel {name!r}; known: {known}")
