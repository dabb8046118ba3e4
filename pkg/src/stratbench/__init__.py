"""stratbench: a workbench for step-counted machine strategies in finite
imperfect-information concurrent games."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    Coalition,
    Diagnostic,
    Model,
    Observation,
    abstract_size,
    joint_repertoire,
    observation_of,
    successor,
    validate_model,
)
from .encoding import (  # noqa: F401
    EncodingSizes,
    decode_model,
    encode_history,
    encode_index,
    encode_model,
    encode_sequence,
    measure_sizes,
)
from .machine import (  # noqa: F401
    BudgetExceeded,
    ComputationalStrategy,
    GeneralStrategy,
    IllegalAction,
    MachineError,
    MalformedOutput,
    RunResult,
    StrategyProgram,
    TapeMachine,
    instantiate,
    measure_steps,
    parse_program,
    parse_tape_machine,
    run,
)
from .ltl import (  # noqa: F401
    Formula,
    LassoPath,
    Verdict3,
    eval_bounded,
    eval_lasso,
    parse_formula,
)
from .outcome import (  # noqa: F401
    EnforcementReport,
    FiniteMemoryStrategy,
    OutcomeTree,
    UnsupportedObjective,
    build_product,
    enforce_bounded,
    enforce_exact,
    simulate_outcomes,
)
from .synthesis import (  # noqa: F401
    CounterModel,
    CounterTransition,
    EnergyVerdict,
    KnowledgeGame,
    SynthesisResult,
    compile_knowledge_strategy,
    energy_reduce_check,
    expand_counter_model,
    knowledge_game,
    solve_reachability,
    solve_safety,
    synthesize,
)
from .templates import (  # noqa: F401
    Cnf,
    builtin_strategies,
    gen_coffee,
    gen_satgame,
    gen_tmrun,
    parse_dimacs,
    registry,
    verifier_from_assignment,
)
from .profiler import (  # noqa: F401
    AbilityReport,
    ComplexityProfile,
    GrowthVerdict,
    check_adaptive_ability,
    check_uniform_ability,
    classify_growth,
    constant_provider,
    profile_strategy,
)
