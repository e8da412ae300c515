"""Building materials and their dielectric description."""

from dataclasses import dataclass
from typing import Any, ClassVar, Dict, Optional, Tuple

from warehouse_sinr.exceptions import InvalidScene


@dataclass(frozen=True)
class Material:
    """
    A shelf material.

    Attributes:
        name (str): Unique material name, referenced by shelves
        rel_permittivity (float): Relative permittivity (dielectric constant), >= 1
        fixed_crossing_loss_db (float, optional): Per-crossing loss that overrides the
            permittivity-derived value (used for metal racking)
    """

    name: str
    rel_permittivity: float
    fixed_crossing_loss_db: Optional[float] = None

    # Free-space permittivity in F/m
    EPSILON_0: ClassVar[float] = 8.854e-12

    def __post_init__(self):
        if not self.name:
            raise InvalidScene("Material name must be non-empty")
        if not self.rel_permittivity >= 1.0:
            raise InvalidScene(
                f"Material '{self.name}': relative permittivity must be >= 1, "
                f"got {self.rel_permittivity}"
            )
        if self.fixed_crossing_loss_db is not None and not self.fixed_crossing_loss_db >= 0.0:
            raise InvalidScene(
                f"Material '{self.name}': fixed crossing loss must be >= 0 dB, "
                f"got {self.fixed_crossing_loss_db}"
            )

    @property
    def absolute_permittivity(self) -> float:
        return self.rel_permittivity * self.EPSILON_0

    def to_dict(self) -> Dict[str, Any]:
        data = {"name": self.name, "eps_r": self.rel_permittivity}
        if self.fixed_crossing_loss_db is not None:
            data["fixed_loss_db"] = self.fixed_crossing_loss_db
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Material":
        try:
            return cls(
                name=str(data["name"]),
                rel_permittivity=float(data["eps_r"]),
                fixed_crossing_loss_db=(
                    float(data["fixed_loss_db"]) if data.get("fixed_loss_db") is not None else None
                ),
            )
        except KeyError as e:
            raise InvalidScene(f"Material entry is missing field {e}") from e


AIR = Material("air", 1.0)

# Representative dielectric constants; metal racking is modelled with a fixed loss.
# Metal's eps_r only encodes it in the permittivity tensor.
DEFAULT_MATERIALS: Tuple[Material, ...] = (
    Material("concrete", 5.24),
    Material("wood", 1.99),
    Material("metal", 10.0, fixed_crossing_loss_db=15.0),
)
