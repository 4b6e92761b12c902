from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

# Modèles Pydantic pour les exports JSON


class LifeValueExport(BaseModel):
    M: int
    digits: List[int]


class FSRepExport(BaseModel):
    order: int
    alpha0: float
    alpha1: float
    alpha: List[List[float]] = Field(
        default_factory=list,
        description="Coefficients non nuls sous la forme [j, i, valeur]",
    )
    state: Optional[List[float]] = None
    M: int = 2
    kappa: str = "identity"


class PolyRepExport(BaseModel):
    degree: int
    coeffs: List[float]
    rms: float
    n_samples: int
    state: Optional[List[float]] = None
    condition: Optional[float] = None
    M: int = Field(2, ge=2)


class TransformExport(BaseModel):
    phi: float
    phi_digits: Optional[LifeValueExport] = None
    psi: float
    N: float
    residual: Optional[float] = None
    N_snapped: Optional[int] = None
    residual_snapped: Optional[float] = None
    snapped: bool = False
    reliable: bool = True


class VerificationEntry(BaseModel):
    name: str
    passed: bool
    measured: Optional[float] = None
    bound: Optional[float] = None
    details: Dict[str, Any] = Field(default_factory=dict)


class VerificationReport(BaseModel):
    success: bool
    entries: List[VerificationEntry]
