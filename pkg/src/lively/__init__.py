"""lively: a deterministic multilayer reactive behavior engine for social robots.

Four reactive layers (falling reaction, social reaction, conversational
gestures, eye blinking) produce abstract action requests each tick; a
priority arbitration stage resolves channel conflicts and maps the winners
onto a declared robot morphology. A scenario simulator and a supervisory
wire service make every session scriptable, steerable and replayable.
"""

from .actuation import (
    Executor,
    FeedbackEvent,
    FeedbackKind,
    MotorCommand,
    PlatformDescriptor,
    PriorityTable,
    arbitrate,
    arbitrate_detailed,
    map_to_motor,
)
from .blink import (
    BlinkModelConfig,
    CommunicativeBehaviorKind,
    PassiveBlinkState,
    on_communicative_behavior,
    passive_step,
    sample_morphology,
)
from .config import (
    EngineConfig,
    SocialConfig,
    config_from_dict,
    config_to_dict,
    data_path,
    default_config,
    default_platform,
    load_config,
    load_platform,
)
from .core import (
    ActionRequest,
    BalanceReading,
    Blink,
    BlinkAmplitude,
    BlinkMorphology,
    ContactKind,
    DeliberativeInput,
    EmotionDisplay,
    EngineSignal,
    FaceDetected,
    FacialExpression,
    GazeShift,
    Gesture,
    LayerId,
    OutputChannel,
    PhysicalContact,
    Posture,
    SensoryEvent,
    SetStiffness,
    SmallMotion,
    SoundSource,
    Speech,
    SpeechActEnd,
    SpeechActRequest,
    Tick,
    ValidationResult,
    validate_event,
)
from .engine import Engine, TickRecord, layer_seed
from .falling import (
    BalanceStatus,
    FallConfig,
    FallPhase,
    FallState,
    classify_balance,
    step_fall_fsm,
)
from .gestures import (
    GestureConfig,
    GestureSpec,
    Keyframe,
    PlannedGesture,
    on_speech,
    validate_library,
)
from .simulator import Scenario, SessionLog, TimelineEntry, load_scenario, replay, run, stats
from .social import (
    IdleMotion,
    IdleMotionSet,
    ReactionPair,
    ReactionRepertoire,
    SituationKind,
    SocialSituation,
    classify_situation,
    idle_behavior,
    select_reaction,
)

__version__ = "0.1.0"
