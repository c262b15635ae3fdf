"""Exception hierarchy. Every error carries enough context to name the culprit."""


class SceneSmithError(Exception):
    pass


class ParseError(SceneSmithError):
    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class InvariantViolation(SceneSmithError):
    def __init__(self, field: str, message: str, record: str | None = None):
        self.field = field
        self.record = record
        where = f"{record}." if record else ""
        super().__init__(f"{where}{field}: {message}")


class InvalidSpec(SceneSmithError):
    pass


class GenerationExhausted(SceneSmithError):
    def __init__(self, rejected: int, reasons: dict[str, int] | None = None):
        self.rejected = rejected
        self.reasons = dict(reasons or {})
        detail = ", ".join(f"{k}={v}" for k, v in sorted(self.reasons.items()))
        super().__init__(f"no layout passed thresholds after {rejected} rejected proposals ({detail})")


class DegeneratePolygon(SceneSmithError):
    pass


class NotAdjacent(SceneSmithError):
    pass


class CatalogGap(SceneSmithError):
    def __init__(self, room_type: str, slot: str):
        self.room_type = room_type
        self.slot = slot
        super().__init__(f"no catalog candidate for mandatory slot {slot!r} in {room_type}")

    def __eq__(self, other):
        return isinstance(other, CatalogGap) and (self.room_type, self.slot) == (other.room_type, other.slot)

    __hash__ = SceneSmithError.__hash__


class PlacementExhausted(SceneSmithError):
    def __init__(self, asset_id: str, room_id: str | None, attempts: int):
        self.asset_id = asset_id
        self.room_id = room_id
        self.attempts = attempts
        super().__init__(f"no collision-free pose for {asset_id} in {room_id or 'any room'} after {attempts} attempts")


class SemanticMismatch(SceneSmithError):
    pass


class RuleConflict(SceneSmithError):
    pass


class InvalidAdjustment(SceneSmithError):
    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {detail}" if detail else invariant)


class NoCompatibleMaterial(SceneSmithError):
    def __init__(self, target: str, target_class: str):
        self.target = target
        self.target_class = target_class
        super().__init__(f"no material applicable to {target_class} (target {target})")


class IncompatibleOverride(SceneSmithError):
    pass


class UnknownMaterialClass(SceneSmithError):
    pass


class MissingTemplate(SceneSmithError):
    pass


class UnsatisfiableRole(SceneSmithError):
    def __init__(self, role: str, filter_: dict | None = None, detail: str = ""):
        self.role = role
        self.filter = dict(filter_ or {})
        msg = f"role {role!r} unsatisfiable with filter {self.filter}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class RoomMismatch(SceneSmithError):
    pass


class InsufficientAssets(SceneSmithError):
    def __init__(self, template_id: str, needed: int, available: int):
        self.template_id = template_id
        self.needed = needed
        self.available = available
        super().__init__(f"template {template_id} needs {needed} distinct assets, catalog offers {available}")


class FloorOutOfRange(SceneSmithError):
    pass
