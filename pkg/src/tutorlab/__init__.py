"""tutorlab: deterministic pedagogical orchestration with a simulation lab.

Rule-based agents select every tutoring action under a per-skill mastery
model; a renderer only words the chosen actions; a Monte Carlo harness with
synthetic students verifies constraint adherence and the measured-vs-latent
mastery gap.
"""

from .agents import (
    ActionType,
    AffectState,
    AgentName,
    AgentProposal,
    ConstraintCheck,
    LearnerSnapshot,
    detect_affect,
    domain_hint,
    ethics_check,
    feedback_propose,
    gather_proposals,
    motivator_propose,
    scaffold_propose,
    tutor_propose,
)
from .bkt import (
    DEFAULT_PARAMS,
    BktParams,
    SkillMastery,
    apply_learning,
    bkt_update,
    is_mastered,
    load_params_table,
    new_mastery,
    posterior_given_obs,
)
from .config import Archetype, PolicyConfig, SimulationConfig, StudentBehavior, load_policy_config
from .features import (
    FeatureVector,
    InteractionEvent,
    detect_wheel_spinning,
    ingest_log,
    rolling_accuracy,
    update_features,
)
from .orchestrator import (
    PRIORITY,
    EsPolicy,
    SessionState,
    StudentInput,
    TraceSink,
    TurnDecision,
    TurnTrace,
    arbitrate,
    log_turn,
    new_session_state,
    process_turn,
    read_traces,
)
from .rendering import (
    RenderContext,
    RenderRequest,
    RendererConfig,
    TemplateSet,
    build_prompt,
    count_tokens,
    render_llm,
    render_template,
)
from .scenarios import ContentStore, Problem, ScenarioSpec, ScenarioStore, answers_match
from .session import ReplayResult, SessionStore, TutorSession, replay_scenario
from .simulation import (
    BaselinePolicy,
    DialogueMetrics,
    SimulationReport,
    SyntheticStudent,
    baseline_policy_step,
    compare_reports,
    constraint_adherence,
    hint_efficiency,
    run_dialogue,
    run_monte_carlo,
    sample_student,
    student_respond,
)
from .stats import WilcoxonResult, wilcoxon_signed_rank

__version__ = "0.1.0"
