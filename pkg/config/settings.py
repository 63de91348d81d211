import os


class Settings:
    def __init__(self):
        self.ARTIFACT_VERSION = "0.1.0"

        # service knobs; the CLI's numbers never depend on these
        self.API_HOST = os.getenv("API_HOST", "0.0.0.0")
        self.API_PORT = int(os.getenv("API_PORT", "8000"))
        self.DEBUG = os.getenv("DEBUG", "False").lower() == "true"
        self.LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING")
        self.TIMEZONE = "UTC"

        # quadrature
        self.POINTS_PER_CIRCLE = 128
        self.POLAR_ORDER = 32
        self.RADIAL_ORDER = 64
        self.MC_SAMPLES = 100_000
        self.MC_BLOCK_SIZE = 16_384

        # verification tolerances
        self.IDENTITY_TOLERANCE = 1e-8
        self.EPD_STEP = 1e-3
        self.EPD_TOLERANCE = 1e-4
        self.PDE_STEP = 1e-3
        self.PDE_TOLERANCE = 1e-4
        self.MAX_PRINCIPLE_SLACK = 1e-9
        self.LIOUVILLE_TOLERANCE = 0.02
        self.LIOUVILLE_MONOTONE_FROM = 10.0
        self.SPECFUN_TOLERANCE = 1e-10
        self.INTEGRAL_TOLERANCE = 1e-8
        self.DERIVATIVE_TOLERANCE = 1e-6
        self.CAUCHY_STEP = 1e-4
        self.CAUCHY_TOLERANCE = 1e-5
        self.ASYMPTOTIC_TOLERANCE = 0.01

        # verify campaigns
        self.VERIFY_CASES = 20
        self.VERIFY_MC_CASES = 3
        self.VERIFY_MC_SAMPLES = 1_000_000
        self.RICHARDSON_STEP = 1e-2
        # below this both Richardson residuals are round-off and carry no order
        self.RICHARDSON_FLOOR = 1e-9

        # walk on spheres
        self.WOS_EPS = 1e-4
        self.WOS_WALKS = 10_000
        self.WOS_MAX_STEPS = 1_000_000
        self.WOS_BLOCK_SIZE = 4_096
        self.WOS_TRUNCATION_LIMIT = 1e-3

        # nodal search
        self.NODAL_DELTA_FRACTION = 0.05
        self.NODAL_DIRECTIONS = 64
        self.NODAL_VALUE_TOLERANCE = 1e-10

        # restricted mean value property
        self.RMVP_RADIUS_FRACTION = 0.5

        self.DEFAULT_WORKERS = os.cpu_count() or 1

    def validate_required_settings(self) -> list:
        problems = []
        if self.RADIAL_ORDER < 4:
            problems.append("RADIAL_ORDER")
        if self.WOS_EPS <= 0:
            problems.append("WOS_EPS")
        if not 0 < self.RMVP_RADIUS_FRACTION <= 1:
            problems.append("RMVP_RADIUS_FRACTION")
        return problems


settings = Settings()
