"""Single source of truth for tolerances, model parameters and run defaults."""


class Config:
    # === Numerical tolerances ===
    HERMITIAN_TOL = 1e-10
    TRACE_TOL = 1e-10
    PSD_TOL = 1e-10
    UNITARY_TOL = 1e-10
    TP_TOL = 1e-10
    POVM_TOL = 1e-10
    KRAUS_CUTOFF = 1e-14           # Relative Choi eigenvalue cutoff when compressing Kraus sets
    ASF_UPPER_SLACK = 1e-9
    MAX_DIM = 64                   # 6 qubits total

    # === Quadrature ===
    GAUSS_HERMITE_NODES = 64
    CAUCHY_NODES = 256
    QUADRATURE_TOL = 1e-10
    QUADRATURE_MAX_NODES = 4096

    # === Two-spin model ===
    TWO_SPIN_J = 1.7
    TWO_SPIN_HX = 1.47
    TWO_SPIN_HY = -1.05
    TWO_SPIN_DELTA = 0.029475

    # === XX-spin model ===
    XX_JX = 1.2
    XX_JY = -2.7

    # === Ising chain (environment scaling) ===
    ISING_J = 1.7
    ISING_HX = 0.9
    ISING_HY = -1.05

    # === Finite-memory model ===
    FINITE_MEMORY_ELL = 9
    FINITE_MEMORY_DELTA = 0.03
    DELTA_M_FACTOR = 2.5

    # === SPAM presets ===
    MILD_SPAM_DELTA1 = 0.04232
    MILD_SPAM_DELTA2 = 0.09321
    SEVERE_SPAM_DELTA1 = 0.2932
    SEVERE_SPAM_DELTA2 = 0.10321

    # === Monte Carlo ===
    SAMPLES_PER_M = 50
    DEFAULT_SEED = 1234
    RNG_ALGORITHM = "PCG64"
    THREADS = 1
    ORACLE_MAX_M = 2

    # === Fitting ===
    FIT_MAX_ITER = 200
    FIT_STEP_TOL = 1e-12
    FIT_MIN_POINTS = 4
    FIT_B_MARGIN = 1e-3            # Fraction of the value span subtracted from min(values)
    WINDOW_R2 = 0.999

    # === Analysis ===
    MEMORY_REL_TOL = 0.01
    COHERENCE_RESIDUAL_FACTOR = 5.0
    COHERENCE_RESIDUAL_FLOOR = 1e-3
    COHERENCE_STDERR_MULTIPLE = 3.0

    # === Output ===
    CSV_FLOAT_FORMAT = "%.17g"
    OUTPUT_DIR = "results"
