"""Sketch-extrude CAD toolchain.

Parse textual CAD programs (including VLM responses), validate their
sketches, compile them to watertight part-labeled meshes, evaluate
reconstructions, and run the dataset CAD-ification pipeline.
"""

from .errors import (
    AssignmentError,
    CadError,
    CompileError,
    ConfigError,
    ConstructionError,
    EncodeError,
    FitError,
    GeometryError,
    ProviderError,
    TransportError,
)
from .ir import (
    Arc,
    Block,
    BooleanOp,
    CadProgram,
    Circle,
    EulerFrame,
    ExtrudeCommand,
    ExtrusionType,
    Line,
    NormalFrame,
    Part,
    Profile,
    command_count,
)
from .geom import (
    Box3,
    Frame,
    LabeledMesh,
    arc_center,
    bounding_box,
    compile_program,
    euler_characteristic,
    export_obj,
    extrude,
    frame_basis,
    is_watertight,
    mesh_area,
    mesh_volume,
    part_bounding_box,
    tessellate_profile,
    triangulate,
)
from .dsl import ParseResult, SourceDiagnostic, parse, print_program
from .validation import ValidationReport, Violation, signed_area, validate
from .metrics import (
    LabeledPointCloud,
    MetricsReport,
    chamfer,
    part_iou,
    prog_success,
    prog_success_details,
    sample_surface,
    seg_scores,
    transfer_labels,
)
from .cadify import (
    ArcFit,
    AssignmentResult,
    CircleFit,
    fit_arc_ransac,
    fit_circle_ransac,
    label_cost_matrix,
    rescale_part,
    solve_assignment,
)
from .provider import (
    FixtureProvider,
    HttpVlmProvider,
    PromptTemplate,
    StubEmbedder,
    fixture_provider,
    http_vlm_provider,
    prompt_template,
    retrieve_semantics,
    stub_embedder,
)
from .unify import (
    DecodeResult,
    EncodedPart,
    NormalizationBox,
    UnifiedParamVector,
    decode,
    dequantize,
    encode,
    fit_normalization_box,
    quantize,
)

__version__ = "0.1.0"
