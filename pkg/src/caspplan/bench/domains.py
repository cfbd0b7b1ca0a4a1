"""
Parameterised PDDL+ benchmark families and small hand-built domains.

Families
--------
``gen-linear``     generator with ``k`` refuel tanks, constant refuel rate.
``gen-nonlinear``  generator with ``k`` tanks drained under Torricelli's law.
``car-linear``     car whose velocity is bounded in ``[-k, k]``.
``car-nonlinear``  car whose acceleration is bounded in ``[-k, k]``.

All numeric parameters are repo-defined; each generated file carries a header
stating them and the plan features they imply.
"""

from __future__ import annotations

from dataclasses import dataclass

FAMILIES = ("gen-linear", "gen-nonlinear", "car-linear", "car-nonlinear")

# default fixed-step horizons: the shortest step bound admitting a plan
FIXED_HORIZON = {"gen-linear": 3, "gen-nonlinear": 3, "car-linear": 3, "car-nonlinear": 4}

GEN_CAPACITY = 1000
GEN_DURATION = 1000
GEN_TANK_LEVEL = 25
GEN_REFUEL_RATE = 2
GEN_NL_TANK_HEIGHT = 4
GEN_NL_TANK_AREA = 10
GEN_NL_GRAVITY = "9.8"
# flow coefficient c with c*sqrt(2*9.8)/area = 0.2, so sqrt(height) drops by 0.1 per time unit
GEN_NL_FLOW_COEF = "0.4517539514526256"
GEN_NL_REFUEL_DURATION = 10
CAR_DISTANCE = 30


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    scale: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.scale < 1:
            raise ValueError("scale must be >= 1")

    @property
    def name(self) -> str:
        return f"{self.family}-{self.scale}"


def generate_instance(spec: InstanceSpec) -> tuple[str, str]:
    """Return ``(domain_text, problem_text)`` for ``spec``."""
    return _BUILDERS[spec.family](spec.scale)


# -- generator -----------------------------------------------------------------

_GEN_LINEAR_DOMAIN = """\
; Generator domain, linear refuelling.
; generate runs for {duration} time units consuming 1 unit of fuel per time unit;
; refuel(?t) empties tank ?t into the generator at (refuel-rate) units per time
; unit, so its duration is (tank-level ?t)/(refuel-rate).
(define (domain generator-linear)
  (:requirements :typing :fluents :durative-actions :time :negative-preconditions)
  (:types tank)
  (:predicates (generator-ran) (available ?t - tank))
  (:functions (fuel-level) (capacity) (refuel-rate) (tank-level ?t - tank))
  (:durative-action generate
    :parameters ()
    :duration (= ?duration {duration})
    :condition (and (at start (not (generator-ran)))
                    (over all (> (fuel-level) 0)))
    :effect (and (decrease (fuel-level) (* #t 1))
                 (at end (generator-ran))))
  (:durative-action refuel
    :parameters (?t - tank)
    :duration (= ?duration (/ (tank-level ?t) (refuel-rate)))
    :condition (and (at start (available ?t))
                    (over all (<= (fuel-level) (capacity))))
    :effect (and (at start (not (available ?t)))
                 (increase (fuel-level) (* #t (refuel-rate)))
                 (decrease (tank-level ?t) (* #t (refuel-rate))))))
"""

_GEN_NONLINEAR_DOMAIN = """\
; Generator domain, refuelling by gravity through an orifice (Torricelli's law).
; Outflow of tank ?t is (flow-coef)*sqrt(2*(gravity)*(tank-height ?t)); the tank
; height drops by outflow/(tank-area).  With the shipped constants
; sqrt(tank-height) decreases by 0.1 per time unit, so a {refuel} time unit refuel
; of a tank of height {height} leaves height 1 and delivers {area}*({height}-1) = 30 units.
(define (domain generator-nonlinear)
  (:requirements :typing :fluents :durative-actions :time :negative-preconditions)
  (:types tank)
  (:predicates (generator-ran) (available ?t - tank))
  (:functions (fuel-level) (capacity) (gravity) (flow-coef) (tank-area)
              (tank-height ?t - tank))
  (:durative-action generate
    :parameters ()
    :duration (= ?duration {duration})
    :condition (and (at start (not (generator-ran)))
                    (over all (> (fuel-level) 0)))
    :effect (and (decrease (fuel-level) (* #t 1))
                 (at end (generator-ran))))
  (:durative-action refuel
    :parameters (?t - tank)
    :duration (= ?duration {refuel})
    :condition (and (at start (available ?t))
                    (over all (<= (fuel-level) (capacity)))
                    (over all (>= (tank-height ?t) 0)))
    :effect (and (at start (not (available ?t)))
                 (increase (fuel-level)
                           (* #t (* (flow-coef) (sqrt (* (* 2 (gravity)) (tank-height ?t))))))
                 (decrease (tank-height ?t)
                           (* #t (/ (* (flow-coef) (sqrt (* (* 2 (gravity)) (tank-height ?t))))
                                    (tank-area)))))))
"""


def _tanks(k: int) -> list[str]:
    return [f"tank{i}" for i in range(1, k + 1)]


def gen_linear(k: int) -> tuple[str, str]:
    fuel = GEN_CAPACITY + 5 - GEN_TANK_LEVEL * k
    tanks = _tanks(k)
    header = (
        f"; gen-linear instance k={k}\n"
        f"; capacity {GEN_CAPACITY}, initial fuel {fuel} = 1005 - 25*k, generate duration "
        f"{GEN_DURATION},\n"
        f"; {k} tank(s) of level {GEN_TANK_LEVEL} refuelled at rate {GEN_REFUEL_RATE}: each refuel "
        f"lasts {GEN_TANK_LEVEL}/{GEN_REFUEL_RATE} = 12.5.\n"
        f"; Consumption is 1000, so all {k} tank(s) are needed; refuelling all of them at\n"
        f"; time 0 peaks the fuel at {fuel} + (2*{k}-1)*12.5 = 992.5 and leaves 5 at t=1000.\n")
    init = [f"(available {t})" for t in tanks]
    init += [f"(= (fuel-level) {fuel})", f"(= (capacity) {GEN_CAPACITY})",
             f"(= (refuel-rate) {GEN_REFUEL_RATE})"]
    init += [f"(= (tank-level {t}) {GEN_TANK_LEVEL})" for t in tanks]
    problem = (header + f"(define (problem gen-linear-{k})\n  (:domain generator-linear)\n"
               f"  (:objects {' '.join(tanks)} - tank)\n"
               "  (:init " + "\n         ".join(init) + ")\n"
               "  (:goal (generator-ran)))\n")
    return _GEN_LINEAR_DOMAIN.format(duration=GEN_DURATION), problem


def gen_nonlinear(k: int) -> tuple[str, str]:
    fuel = GEN_CAPACITY + 5 - 30 * k
    tanks = _tanks(k)
    header = (
        f"; gen-nonlinear instance k={k}\n"
        f"; capacity {GEN_CAPACITY}, initial fuel {fuel} = 1005 - 30*k, generate duration "
        f"{GEN_DURATION};\n"
        f"; {k} tank(s) of height {GEN_NL_TANK_HEIGHT}, each refuel delivers 30 units in "
        f"{GEN_NL_REFUEL_DURATION} time units.\n")
    init = [f"(available {t})" for t in tanks]
    init += [f"(= (fuel-level) {fuel})", f"(= (capacity) {GEN_CAPACITY})",
             f"(= (gravity) {GEN_NL_GRAVITY})", f"(= (flow-coef) {GEN_NL_FLOW_COEF})",
             f"(= (tank-area) {GEN_NL_TANK_AREA})"]
    init += [f"(= (tank-height {t}) {GEN_NL_TANK_HEIGHT})" for t in tanks]
    problem = (header + f"(define (problem gen-nonlinear-{k})\n  (:domain generator-nonlinear)\n"
               f"  (:objects {' '.join(tanks)} - tank)\n"
               "  (:init " + "\n         ".join(init) + ")\n"
               "  (:goal (generator-ran)))\n")
    domain = _GEN_NONLINEAR_DOMAIN.format(duration=GEN_DURATION, refuel=GEN_NL_REFUEL_DURATION,
                                          height=GEN_NL_TANK_HEIGHT, area=GEN_NL_TANK_AREA)
    return domain, problem


# -- car -----------------------------------------------------------------------

_CAR_LINEAR_DOMAIN = """\
; Car domain, linear version: the planner sets the velocity directly in unit
; steps within [-(max-speed), (max-speed)]; position grows at the velocity.
(define (domain car-linear)
  (:requirements :fluents :time :negative-preconditions)
  (:predicates (running) (goal-reached))
  (:functions (d) (v) (max-speed))
  (:process moving
    :parameters ()
    :precondition (running)
    :effect (increase (d) (* #t (v))))
  (:action accelerate
    :parameters ()
    :precondition (and (running) (< (v) (max-speed)))
    :effect (increase (v) 1))
  (:action decelerate
    :parameters ()
    :precondition (and (running) (> (v) (- (max-speed))))
    :effect (decrease (v) 1))
  (:action stop
    :parameters ()
    :precondition (and (running) (>= (d) {distance}) (< (v) 0.1) (> (v) -0.1))
    :effect (and (not (running)) (goal-reached))))
"""

_CAR_NONLINEAR_DOMAIN = """\
; Car domain, non-linear version: the planner changes the acceleration in unit
; steps within [-(max-acc), (max-acc)]; velocity integrates the acceleration and
; position integrates the velocity (quadratic in time).
(define (domain car-nonlinear)
  (:requirements :fluents :time :negative-preconditions)
  (:predicates (running) (goal-reached))
  (:functions (d) (v) (a) (max-acc))
  (:process moving
    :parameters ()
    :precondition (running)
    :effect (and (increase (v) (* #t (a)))
                 (increase (d) (* #t (v)))))
  (:action accelerate
    :parameters ()
    :precondition (and (running) (< (a) (max-acc)))
    :effect (increase (a) 1))
  (:action decelerate
    :parameters ()
    :precondition (and (running) (> (a) (- (max-acc))))
    :effect (decrease (a) 1))
  (:action stop
    :parameters ()
    :precondition (and (running) (>= (d) {distance}) (< (v) 0.1) (> (v) -0.1))
    :effect (and (not (running)) (goal-reached))))
"""


def car_linear(k: int) -> tuple[str, str]:
    problem = (
        f"; car-linear instance k={k}: velocity range [-{k},{k}], stop after {CAR_DISTANCE} units.\n"
        f"; A plan: accelerate at 0, decelerate at {CAR_DISTANCE}, stop (horizon 3).\n"
        f"(define (problem car-linear-{k})\n  (:domain car-linear)\n"
        f"  (:init (running) (= (d) 0) (= (v) 0) (= (max-speed) {k}))\n"
        "  (:goal (goal-reached)))\n")
    return _CAR_LINEAR_DOMAIN.format(distance=CAR_DISTANCE), problem


def car_nonlinear(k: int) -> tuple[str, str]:
    problem = (
        f"; car-nonlinear instance k={k}: acceleration range [-{k},{k}], stop after "
        f"{CAR_DISTANCE} units.\n"
        "; A plan: accelerate at 0, decelerate twice at T, stop at 2T with T*T >= 30 (horizon 4).\n"
        f"(define (problem car-nonlinear-{k})\n  (:domain car-nonlinear)\n"
        f"  (:init (running) (= (d) 0) (= (v) 0) (= (a) 0) (= (max-acc) {k}))\n"
        "  (:goal (goal-reached)))\n")
    return _CAR_NONLINEAR_DOMAIN.format(distance=CAR_DISTANCE), problem


_BUILDERS = {
    "gen-linear": gen_linear,
    "gen-nonlinear": gen_nonlinear,
    "car-linear": car_linear,
    "car-nonlinear": car_nonlinear,
}


# -- small hand-built domains ----------------------------------------------------

FALLING_BALL_DOMAIN = """\
; A ball falls whenever it is not held and above the ground.
(define (domain falling-ball)
  (:requirements :fluents :time :negative-preconditions)
  (:predicates (held))
  (:functions (height) (velocity))
  (:process falling
    :parameters ()
    :precondition (and (not (held)) (> (height) 0))
    :effect (and (increase (velocity) (* #t 9.8))
                 (decrease (height) (* #t (velocity))))))
"""


def falling_ball_problem(height: str = "5", held: bool = False) -> str:
    return (f"(define (problem drop)\n  (:domain falling-ball)\n"
            f"  (:init {'(held) ' if held else ''}(= (height) {height}) (= (velocity) 0))\n"
            "  (:goal (and)))\n")


DIP_DOMAIN = """\
; Mid-state dip: burn lasts 4 time units with fuel' = flow and flow' = 1, flow
; starting at -2, so fuel(tau) = P - 2*tau + tau^2/2 where P is the fuel at the
; start of burn.  Both state boundaries see fuel = P, but the minimum P - 2 is
; reached at tau = 2; the invariant fuel > 0 therefore needs P > 2.  P is the
; duration of the preceding pump action (at most 10).
(define (domain dip)
  (:requirements :fluents :durative-actions :time :negative-preconditions
                 :duration-inequalities)
  (:predicates (primed) (burned))
  (:functions (fuel) (flow))
  (:durative-action pump
    :parameters ()
    :duration (<= ?duration 10)
    :condition (at start (not (primed)))
    :effect (and (at end (primed)) (increase (fuel) (* #t 1))))
  (:durative-action burn
    :parameters ()
    :duration (= ?duration 4)
    :condition (and (at start (primed)) (at start (not (burned)))
                    (over all (> (fuel) 0)))
    :effect (and (at end (burned))
                 (increase (fuel) (* #t (flow)))
                 (increase (flow) (* #t 1)))))
"""

DIP_PROBLEM = """\
(define (problem dip-1)
  (:domain dip)
  (:init (= (fuel) 0) (= (flow) -2))
  (:goal (burned)))
"""
