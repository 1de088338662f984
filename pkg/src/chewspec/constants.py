"""
Centralized constants for chewspec

Organized into sections:
- Spec language
- Packet generation
- Differential analysis
- Code retrieval
- Harness
- Agents
- Error Handling
- Default Configuration
"""

# Spec language
MAX_UINT_BITS = 64
MAX_DISCRIMINATOR_BITS = 16
TOTAL_LEN = "total_len"

KEYWORDS = frozenset(
    {
        "format",
        "where",
        "if",
        "switch",
        "default",
        "bytes",
        "and",
        "or",
        "not",
        TOTAL_LEN,
    }
)

# Diagnostic codes are stable: tests and agent prompts match on them.
DIAG_LEXICAL = "lexical-error"
DIAG_SYNTAX = "syntax-error"
DIAG_UNKNOWN_OPERATOR = "unknown-operator"
DIAG_UNDEFINED_REFERENCE = "undefined-reference"
DIAG_FORWARD_REFERENCE = "forward-reference"
DIAG_OUT_OF_SCOPE_REFERENCE = "out-of-scope-reference"
DIAG_DUPLICATE_FIELD = "duplicate-field"
DIAG_EMPTY_RECORD = "empty-record"
DIAG_BAD_WIDTH = "bad-width"
DIAG_DISCRIMINATOR_TOO_WIDE = "discriminator-too-wide"
DIAG_DISCRIMINATOR_TYPE = "discriminator-not-integer"
DIAG_DUPLICATE_TAG = "duplicate-tag"
DIAG_UNREACHABLE_ARM = "unreachable-arm"
DIAG_TYPE_ERROR = "type-error"
DIAG_UNALIGNED = "unaligned-section"
DIAG_EMPTY_SPEC = "empty-spec"

OPERATOR_HINTS = {
    "=": "==",
    "&&": "and",
    "||": "or",
    "!": "not",
    "=<": "<=",
    "=>=": ">=",
}

# Packet generation
DEFAULT_POSITIVES = 64
DEFAULT_NEGATIVES_PER_CONSTRAINT = 1
RETRY_BUDGET = 10_000
MAX_EXTRA_TOTAL_BYTES = 64
MAX_PATHS = 4096
STRUCTURAL_MUTATIONS = ("truncate", "extend", "length-corrupt")

# Differential analysis
EXHAUSTIVE_LIMIT_BITS = 20
SAMPLE_COUNT = 1 << 16
TOTAL_LEN_DOMAIN_BITS = 10
WITNESS_BUDGET = 64

DISCREPANCY_KINDS = (
    "TYPE_MISMATCH",
    "MISSING_FIELD_IN_CODE",
    "MISSING_FIELD_IN_DOC",
    "CONSTRAINT_MISSING_IN_CODE",
    "CONSTRAINT_MISSING_IN_DOC",
    "CONSTRAINT_CONFLICT",
)
FIELD_TYPE_KINDS = ("TYPE_MISMATCH", "MISSING_FIELD_IN_CODE", "MISSING_FIELD_IN_DOC")
SWAPPED_KINDS = {
    "MISSING_FIELD_IN_CODE": "MISSING_FIELD_IN_DOC",
    "MISSING_FIELD_IN_DOC": "MISSING_FIELD_IN_CODE",
    "CONSTRAINT_MISSING_IN_CODE": "CONSTRAINT_MISSING_IN_DOC",
    "CONSTRAINT_MISSING_IN_DOC": "CONSTRAINT_MISSING_IN_CODE",
}

# Code retrieval
INDEX_SUFFIXES = {"c": (".c", ".h"), "python": (".py",)}
SYMBOL_KINDS = ("function", "type", "macro", "global")

# Identifiers from the C standard library and common system headers; never retrieved.
# fmt: off
C_STANDARD_SYMBOLS = frozenset(
    {
        "NULL", "EOF", "errno", "stdin", "stdout", "stderr", "bool", "true", "false",
        "size_t", "ssize_t", "ptrdiff_t", "uintptr_t", "FILE",
        "int8_t", "int16_t", "int32_t", "int64_t",
        "uint8_t", "uint16_t", "uint32_t", "uint64_t",
        "memcpy", "memmove", "memset", "memcmp",
        "strlen", "strcmp", "strncmp", "strcpy", "strncpy",
        "malloc", "calloc", "realloc", "free", "abort", "exit", "getenv", "assert",
        "printf", "fprintf", "snprintf", "sprintf", "puts", "fputs", "fputc", "putchar",
        "fread", "fwrite", "fflush", "fopen", "fclose", "read", "write",
        "ntohl", "ntohs", "htonl", "htons",
    }
)
C_KEYWORDS = frozenset(
    {
        "auto", "break", "case", "char", "const", "continue", "default", "do",
        "double", "else", "enum", "extern", "float", "for", "goto", "if", "inline",
        "int", "long", "register", "restrict", "return", "short", "signed", "sizeof",
        "static", "struct", "switch", "typedef", "union", "unsigned", "void",
        "volatile", "while", "defined",
    }
)
# fmt: on

# Harness
TRACE_ENV_VAR = "CHEWSPEC_TRACE"
TRACE_END_MARKER = "TRACE-END"
TRACE_SETTLE_SECONDS = 0.2
FRAME_HEADER_BYTES = 4
MAX_FRAME_BYTES = (1 << 32) - 1
STDOUT_CHUNK_BYTES = 4096
BUILD_PROFILES = {
    "c": ["cc", "-std=c99", "-O1", "-o", "{output}", "{sources}"],
    "python": ["{python}", "-m", "chewspec.harness.pylaunch", "{output}", "{sources}"],
}
SOURCE_SUFFIXES = {"c": (".c",), "python": (".py",)}
DEFAULT_BUILD_TIMEOUT = 60.0
DEFAULT_PACKET_TIMEOUT = 2.0
DEFAULT_STARTUP_GRACE = 5.0

# Agents
DEFAULT_ISOLATION_BUDGET = 8
DEFAULT_SYNTAX_BUDGET = 6
DEFAULT_SEMANTIC_BUDGET = 6
DEFAULT_RETRIEVAL_BUDGET = 200
MAX_TOOL_CALLS_PER_TURN = 32
CHUNK_MAX_CHARS = 4000
CHUNK_OVERLAP_CHARS = 200
DEFAULT_API_KEY_ENV = "CHEWSPEC_API_KEY"
NO_FORMAT_REPLY = "NONE"

# Error Handling
ERROR_TEMPLATES = {
    "unbound_field": "Unbound field '{name}' in constraint '{constraint}'",
    "unsatisfiable": (
        "No packet satisfies '{spec}' on any path within {budget} attempts"
    ),
    "empty_repo": "No {language} source files found under {path}",
    "entry_not_found": "Entry function '{name}' not found in the index",
    "build_not_configured": "No build command configured for profile '{profile}'",
    "build_timeout": "Build exceeded {timeout}s",
    "executable_missing": "Module executable not found: {path}",
    "drift": "Transcript drift in session '{session}' turn {turn}: {reason}",
    "budget": "{loop} budget of {budget} exhausted",
    "unknown_tool": "Tool '{name}' is not registered for role '{role}'",
    "escape": "Path '{path}' escapes the workspace root",
}

# Default Configuration
DEFAULT_OUTPUT_DIR = "chewspec-out"
DEFAULT_EXCLUSIONS = [
    ".*",
    "build/*",
    "dist/*",
    "venv*",
    ".venv*",
    "__pycache__",
]

# CLI Configuration
CLI_HELP = {
    "config": "Pipeline configuration file (TOML)",
    "replay": "Directory of recorded transcripts; forces replay mode",
    "seed": "Seed for packet generation",
    "out": "Output directory for artifacts",
    "format": "Report format (json|text)",
    "catalog": "Known-bug catalog used to group the report",
}
