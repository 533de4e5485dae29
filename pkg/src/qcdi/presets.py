"""Ready-made instances covering the qualitative regimes of the problem.

The ``m2-*`` family shares one observation model (four symbols, two
post-change regimes whose distributions are mirror images, change rate
1/20, prior change mass 1/50) and varies only the cost structure, which is
what shapes the stopping regions.  ``m3-sym`` extends it with a third
regime.  ``pure-detection-m1`` has a single post-change regime and charges
only false alarms, so identification plays no role; ``identify-only-m2``
starts with the change already in force, so detection plays no role.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import CostSpec, ModelSpec, ObservationAlphabet

_M2_KW = dict(
    alphabet=ObservationAlphabet(4),
    hypotheses=2,
    p0=1.0 / 50.0,
    p=1.0 / 20.0,
    nu=(0.5, 0.5),
    f=(
        (0.25, 0.25, 0.25, 0.25),
        (0.4, 0.3, 0.2, 0.1),
        (0.1, 0.2, 0.3, 0.4),
    ),
)


@dataclass(frozen=True)
class InstancePreset:
    name: str
    description: str
    model: ModelSpec
    costs: CostSpec
    suggested_resolution: int


def _preset(name, description, G, model_kw, c, a):
    return InstancePreset(
        name=name,
        description=description,
        model=ModelSpec(name=name, **model_kw),
        costs=CostSpec(c=c, a=a),
        suggested_resolution=G,
    )


def _all_presets() -> tuple:
    return (
        _preset(
            "m2-sym-fa10",
            "two regimes, symmetric cross cost 3, false-alarm charge 10",
            200,
            _M2_KW,
            1.0,
            ((10.0, 10.0), (0.0, 3.0), (3.0, 0.0)),
        ),
        _preset(
            "m2-sym-fa50",
            "two regimes, symmetric cross cost 3, heavy false-alarm charge 50",
            200,
            _M2_KW,
            1.0,
            ((50.0, 50.0), (0.0, 3.0), (3.0, 0.0)),
        ),
        _preset(
            "m2-sym-cross10",
            "two regimes, cross cost as heavy as the false-alarm charge",
            200,
            _M2_KW,
            1.0,
            ((10.0, 10.0), (0.0, 10.0), (10.0, 0.0)),
        ),
        _preset(
            "m2-skew-cross",
            "two regimes, asymmetric cross costs 16 vs 4",
            200,
            _M2_KW,
            1.0,
            ((10.0, 10.0), (0.0, 16.0), (4.0, 0.0)),
        ),
        _preset(
            "m2-asym-fa",
            "two regimes, regime-dependent false-alarm charges 14 and 20",
            200,
            _M2_KW,
            1.0,
            ((14.0, 20.0), (0.0, 8.0), (8.0, 0.0)),
        ),
        _preset(
            "m2-asym-fa-c2",
            "same charges as m2-asym-fa with doubled delay rate",
            200,
            _M2_KW,
            2.0,
            ((14.0, 20.0), (0.0, 8.0), (8.0, 0.0)),
        ),
        _preset(
            "m3-sym",
            "three regimes, symmetric costs, four symbols",
            60,
            dict(
                alphabet=ObservationAlphabet(4),
                hypotheses=3,
                p0=1.0 / 50.0,
                p=1.0 / 20.0,
                nu=(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
                f=(
                    (0.25, 0.25, 0.25, 0.25),
                    (0.4, 0.3, 0.2, 0.1),
                    (0.1, 0.2, 0.3, 0.4),
                    (0.3, 0.2, 0.2, 0.3),
                ),
            ),
            1.0,
            (
                (40.0, 40.0, 40.0),
                (0.0, 20.0, 20.0),
                (20.0, 0.0, 20.0),
                (20.0, 20.0, 0.0),
            ),
        ),
        _preset(
            "pure-detection-m1",
            "single post-change regime, false-alarm charge only",
            2000,
            dict(
                alphabet=ObservationAlphabet(2),
                hypotheses=1,
                p0=0.0,
                p=0.1,
                nu=(1.0,),
                f=((0.8, 0.2), (0.2, 0.8)),
            ),
            0.05,
            ((1.0,), (0.0,)),
        ),
        _preset(
            "identify-only-m2",
            "change certain at time zero, unit misidentification charges",
            200,
            dict(
                alphabet=ObservationAlphabet(2),
                hypotheses=2,
                p0=1.0,
                p=0.5,
                nu=(0.5, 0.5),
                f=((0.5, 0.5), (0.8, 0.2), (0.3, 0.7)),
            ),
            0.3,
            ((1.0, 1.0), (0.0, 1.0), (1.0, 0.0)),
        ),
    )


PRESETS = {p.name: p for p in _all_presets()}


def preset_names() -> tuple:
    return tuple(PRESETS)


def get_preset(name: str) -> InstancePreset:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(preset_names())
        raise KeyError(f"unknown preset {name!r}; known presets: {known}") from None
