"""Domain records for the dependent multiplier bootstrap."""
from dataclasses import dataclass, field
import enum
import math

import numpy as np
from scipy.stats import norm

from .exceptions import ConfigurationError, DataFormatError


class KernelFamily(enum.Enum):
    TRUNCATED = 'truncated'
    BARTLETT = 'bartlett'
    PARZEN = 'parzen'
    FLAT_TOP = 'flattop'
    UNIFORM_SUM = 'usum'


class KernelRole(enum.Enum):
    """Whether a kernel is used as moving-average weights or as a covariance function."""

    WEIGHT_KAPPA = 'kappa'
    COVARIANCE_PHI = 'phi'


class MultiplierMethod(enum.Enum):
    MOVING_AVERAGE = 'moving-average'
    COVARIANCE_MATRIX = 'covariance-matrix'


class BaseLaw(enum.Enum):
    NORMAL = 'normal'
    RADEMACHER = 'rademacher'


class PartialDerivativeVariant(enum.Enum):
    REMILLARD_SCAILLET = 'remillard-scaillet'
    BOUNDARY_CORRECTED = 'boundary-corrected'
    BUCHER_RUPPERT = 'bucher-ruppert'


class CopulaFamily(enum.Enum):
    INDEPENDENCE = 'independence'
    CLAYTON = 'clayton'
    GUMBEL = 'gumbel'


class ModelKind(enum.Enum):
    IID = 'iid'
    AR1 = 'ar1'
    NAR = 'nar'
    EXPAR = 'expar'
    GARCH = 'garch'


class StatisticKind(enum.Enum):
    CVM = 'cvm'
    KS = 'ks'
    CHANGEPOINT_KS = 'changepoint-ks'
    CHANGEPOINT_CVM = 'changepoint-cvm'

    @property
    def is_changepoint(self):
        return self in (StatisticKind.CHANGEPOINT_KS, StatisticKind.CHANGEPOINT_CVM)


# (omega, beta, alpha) per margin
DEFAULT_GARCH_PARAMS = ((0.012, 0.919, 0.072), (0.037, 0.868, 0.115))


@dataclass(frozen=True)
class KernelSpec:
    """A kernel from the admissible list, together with the role it is used in.

    - FLAT_TOP carries its plateau parameter ``c`` in [0, 1]
    - UNIFORM_SUM carries the number ``p`` of summed uniforms
    - truncated and flat-top kernels cannot act as covariance functions,
      their covariance matrices are not positive definite
    """

    family: KernelFamily
    role: KernelRole = KernelRole.WEIGHT_KAPPA
    c: float = None
    p: int = None

    def __post_init__(self):
        if self.family is KernelFamily.FLAT_TOP:
            if self.c is None or not 0.0 <= float(self.c) <= 1.0:
                raise ConfigurationError(f'flat-top parameter c must lie in [0, 1], got {self.c}')
            object.__setattr__(self, 'c', float(self.c))
        elif self.c is not None:
            raise ConfigurationError(f'parameter c only applies to the flat-top kernel, not {self.family.value}')

        if self.family is KernelFamily.UNIFORM_SUM:
            if self.p is None or int(self.p) != self.p or int(self.p) < 1:
                raise ConfigurationError(f'uniform-sum parameter p must be a positive integer, got {self.p}')
            object.__setattr__(self, 'p', int(self.p))
        elif self.p is not None:
            raise ConfigurationError(f'parameter p only applies to the uniform-sum kernel, not {self.family.value}')

        if self.role is KernelRole.COVARIANCE_PHI and not self.admissible_as_phi:
            raise ConfigurationError(
                f'kernel {self.name} cannot be used as a multiplier covariance function: '
                'its covariance matrices are not positive definite')

    @property
    def admissible_as_phi(self):
        if self.family in (KernelFamily.TRUNCATED, KernelFamily.FLAT_TOP):
            return False

        # the sum of a single uniform is the truncated kernel
        if self.family is KernelFamily.UNIFORM_SUM and self.p == 1:
            return False

        return True

    @property
    def name(self):
        """Canonical string form, as accepted by :meth:`parse`."""
        if self.family is KernelFamily.FLAT_TOP:
            return f'flattop:{self.c:g}'
        if self.family is KernelFamily.UNIFORM_SUM:
            return f'usum:{self.p}'
        return self.family.value

    def lipschitz_constant(self):
        from .kernels import lipschitz_constant
        return lipschitz_constant(self)

    def with_role(self, role):
        return KernelSpec(self.family, role, c=self.c, p=self.p)

    @classmethod
    def parse(cls, text, role=KernelRole.WEIGHT_KAPPA):
        """Build a spec from ``truncated``, ``bartlett``, ``parzen``, ``flattop:<c>`` or ``usum:<p>``."""

        if isinstance(text, KernelSpec):
            return text.with_role(role)

        name, _, argument = str(text).strip().lower().partition(':')

        try:
            family = KernelFamily(name)
        except ValueError:
            raise ConfigurationError(f'unknown kernel: {text!r}') from None

        try:
            if family is KernelFamily.FLAT_TOP:
                return cls(family, role, c=float(argument) if argument else 0.5)
            if family is KernelFamily.UNIFORM_SUM:
                if not argument:
                    raise ConfigurationError('usum kernel needs its order, e.g. usum:8')
                return cls(family, role, p=int(argument))
        except ValueError as exp:
            if isinstance(exp, ConfigurationError):
                raise
            raise ConfigurationError(f'invalid kernel parameter in {text!r}') from None

        if argument:
            raise ConfigurationError(f'kernel {name} takes no parameter, got {text!r}')

        return cls(family, role)

    def __str__(self):
        return self.name


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """n x d sample, rows indexed by time."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)

        if values.ndim == 1:
            values = values.reshape((-1, 1))
        elif values.ndim != 2:
            raise DataFormatError(f'data must be a two dimensional array, got {values.ndim} dimensions')

        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DataFormatError('data must contain at least one row and one column')

        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            row, column = bad[0]
            raise DataFormatError('non-finite value in data', row=int(row) + 1, column=int(column) + 1)

        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]


def as_data_matrix(data):
    """Accept a DataMatrix or anything numpy can turn into an n x d array."""

    if isinstance(data, DataMatrix):
        return data
    return DataMatrix(data)


@dataclass(frozen=True, eq=False)
class PseudoObsWindow:
    """Mid-ranks of the observations k..l (1-based, inclusive), computed within the window."""

    window: tuple
    ranks: np.ndarray

    @property
    def size(self):
        return self.ranks.shape[0]

    @property
    def d(self):
        return self.ranks.shape[1]

    @property
    def uhat(self):
        """Pseudo-observations R / m."""
        if self.size == 0:
            return self.ranks.copy()
        return self.ranks / self.size

    @classmethod
    def empty(cls, k, d):
        """The window k..k-1, whose empirical copula is identically zero."""
        return cls(window=(k, k - 1), ranks=np.zeros((0, d)))


@dataclass(frozen=True, eq=False)
class EvalGrid:
    """Points of [0, 1]^d at which processes are evaluated."""

    points: np.ndarray
    construction: str = 'explicit'
    per_axis: int = None
    open: bool = False

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))

        if points.ndim != 2 or points.shape[0] == 0:
            raise ConfigurationError('an evaluation grid needs at least one point')
        if np.any(points < 0.0) or np.any(points > 1.0):
            raise ConfigurationError('grid coordinates must lie in [0, 1]')
        if self.open and np.any((points == 0.0) | (points == 1.0)):
            raise ConfigurationError('an open grid cannot contain boundary coordinates')

        points.setflags(write=False)
        object.__setattr__(self, 'points', points)

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    @classmethod
    def lattice(cls, per_axis, d, open=True):
        """Product lattice of per_axis points per coordinate.

        Open lattices use the midpoints i / (per_axis + 1), i = 1..per_axis;
        closed ones use i / (per_axis - 1), i = 0..per_axis-1.
        """

        per_axis = int(per_axis)
        if per_axis < 1 or (not open and per_axis < 2):
            raise ConfigurationError(f'invalid lattice size {per_axis}')

        if open:
            axis = np.arange(1, per_axis + 1) / (per_axis + 1)
        else:
            axis = np.arange(per_axis) / (per_axis - 1)

        mesh = np.meshgrid(*([axis] * d), indexing='ij')
        points = np.column_stack([m.ravel() for m in mesh])

        return cls(points=points, construction='lattice', per_axis=per_axis, open=open)

    @classmethod
    def explicit(cls, points):
        return cls(points=points, construction='explicit')


@dataclass(frozen=True)
class MultiplierConfig:
    """Everything needed to draw a batch of dependent multiplier sequences.

    For the moving average construction ell = 2b - 1 must be odd.
    """

    method: MultiplierMethod
    kernel: KernelSpec
    ell: int
    n: int
    M: int
    seed: int
    base_law: BaseLaw = BaseLaw.NORMAL

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 1:
            raise ConfigurationError(f'bandwidth ell must be a positive integer, got {self.ell}')
        if self.n < 1:
            raise ConfigurationError(f'sample length n must be positive, got {self.n}')
        if self.M < 1:
            raise ConfigurationError(f'replicate count M must be positive, got {self.M}')

        if self.method is MultiplierMethod.MOVING_AVERAGE:
            if self.ell % 2 == 0:
                raise ConfigurationError(f'the moving average construction needs an odd ell = 2b - 1, got {self.ell}')
            if self.kernel.role is not KernelRole.WEIGHT_KAPPA:
                raise ConfigurationError('the moving average construction takes a weight kernel')
        else:
            if self.kernel.role is not KernelRole.COVARIANCE_PHI:
                raise ConfigurationError('the covariance matrix construction takes a covariance kernel')
            if self.base_law is not BaseLaw.NORMAL:
                raise ConfigurationError('the covariance matrix construction uses standard normal variables')

    @property
    def b(self):
        """Half-width b with ell = 2b - 1."""
        return (self.ell + 1) // 2


@dataclass(frozen=True, eq=False)
class MultiplierBatch:
    """M x n multiplier draws, row m being the m-th independent sequence."""

    xi: np.ndarray
    config: MultiplierConfig

    @property
    def M(self):
        return self.xi.shape[0]

    @property
    def n(self):
        return self.xi.shape[1]


@dataclass(frozen=True)
class PartialDerivEstimatorSpec:
    """Finite-difference estimator of the copula partial derivatives.

    A bandwidth of None means n^(-1/2) for the sample at hand.
    """

    variant: PartialDerivativeVariant = PartialDerivativeVariant.REMILLARD_SCAILLET
    bandwidth: float = None

    def __post_init__(self):
        if self.bandwidth is not None and not 0.0 < self.bandwidth < 0.5:
            raise ConfigurationError(f'partial derivative bandwidth must lie in (0, 1/2), got {self.bandwidth}')

    def resolve_bandwidth(self, n):
        if self.bandwidth is not None:
            return self.bandwidth
        return min(n ** -0.5, 0.5 - 1e-12)


@dataclass(frozen=True, eq=False)
class ReplicateProcessSet:
    """Replicate process values, M x |grid| or M x |s-grid| x |grid|."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)


def odd_bandwidth(ell):
    """ell itself when odd, else ell + 1."""
    ell = int(ell)
    return ell if ell % 2 == 1 else ell + 1


@dataclass(frozen=True)
class BandwidthEstimate:
    ell_opt: int
    ell_raw: float
    L_used: int
    gamma_bar_sq: float
    delta_bar: float
    phi_constants: tuple
    grid_size: int
    n: int

    def for_moving_average(self):
        """ell_opt moved up to the next odd integer, as ell = 2b - 1."""
        return odd_bandwidth(self.ell_opt)


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    statistic: float
    replicates: np.ndarray
    p_value: float
    quantiles: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def M(self):
        return self.replicates.shape[0]


@dataclass(frozen=True)
class CopulaSpec:
    """Parametric copula used to draw innovations and as the simulation truth."""

    family: CopulaFamily
    theta: float = None

    def __post_init__(self):
        if self.family is CopulaFamily.INDEPENDENCE:
            if self.theta is not None:
                raise ConfigurationError('the independence copula takes no parameter')
            return

        if self.theta is None or not math.isfinite(self.theta):
            raise ConfigurationError(f'{self.family.value} copula needs a finite parameter')

        if self.family is CopulaFamily.CLAYTON and self.theta <= 0:
            raise ConfigurationError(f'Clayton parameter must be positive, got {self.theta}')

        if self.family is CopulaFamily.GUMBEL and self.theta < 1:
            raise ConfigurationError(f'Gumbel-Hougaard parameter must be at least 1, got {self.theta}')

        object.__setattr__(self, 'theta', float(self.theta))

    @classmethod
    def parse(cls, family, theta=None):
        try:
            family = CopulaFamily(str(family).strip().lower())
        except ValueError:
            raise ConfigurationError(f'unknown copula family: {family!r}') from None

        if family is CopulaFamily.INDEPENDENCE:
            theta = None

        return cls(family, theta)

    def kendall_tau(self):
        if self.family is CopulaFamily.CLAYTON:
            return self.theta / (self.theta + 2.0)
        if self.family is CopulaFamily.GUMBEL:
            return 1.0 - 1.0 / self.theta
        return 0.0

    @property
    def name(self):
        if self.family is CopulaFamily.INDEPENDENCE:
            return self.family.value
        return f'{self.family.value}({self.theta:g})'


@dataclass(frozen=True)
class DataModel:
    """One of the bivariate serially dependent data generating processes.

    When ``copula_after`` is set, innovations of the observations after
    floor(n * break_at) are drawn from that copula instead.
    """

    kind: ModelKind
    copula: CopulaSpec
    n: int
    burn_in: int = 100
    garch_params: tuple = DEFAULT_GARCH_PARAMS
    copula_after: CopulaSpec = None
    break_at: float = 0.5

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError(f'sample size must be positive, got {self.n}')
        if self.burn_in < 0:
            raise ConfigurationError(f'burn-in must be non-negative, got {self.burn_in}')
        if not 0.0 < self.break_at < 1.0:
            raise ConfigurationError(f'break position must lie in (0, 1), got {self.break_at}')

        if self.kind is ModelKind.GARCH:
            for omega, beta, alpha in self.garch_params:
                if omega <= 0 or alpha < 0 or beta < 0 or alpha + beta >= 1:
                    raise ConfigurationError(
                        f'GARCH parameters (omega={omega}, beta={beta}, alpha={alpha}) are not stationary')

    def stationary_margin(self):
        """Frozen scipy distribution of each stationary margin, known for IID and AR1 only."""

        if self.kind is ModelKind.IID:
            return norm(loc=0.0, scale=1.0)
        if self.kind is ModelKind.AR1:
            return norm(loc=0.0, scale=math.sqrt(1.0 / (1.0 - 0.5 ** 2)))

        raise ConfigurationError(f'the stationary margin of the {self.kind.value} model has no closed form')

    @property
    def scenario(self):
        name = f'{self.kind.value}-{self.copula.name}'
        if self.copula_after is not None:
            name += f'-to-{self.copula_after.name}@{self.break_at:g}'
        return name
