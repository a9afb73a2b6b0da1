/** Attribute metadata in the canonical wire order. */

export interface AttrMeta {
  name: string;
  label: string;
  unit: string;
  icon: string;
  binary: boolean;
  decimals: number;
}

export const ATTRS: AttrMeta[] = [
  { name: "horizontal_velocity", label: "H-Vel", unit: "m/s", icon: "→", binary: false, decimals: 1 },
  { name: "vertical_velocity", label: "V-Vel", unit: "m/s", icon: "↑", binary: false, decimals: 1 },
  { name: "altitude", label: "Alt", unit: "m", icon: "▲", binary: false, decimals: 0 },
  { name: "battery", label: "Batt", unit: "", icon: "▧", binary: false, decimals: 2 },
  { name: "rotor", label: "Rotor", unit: "", icon: "✺", binary: true, decimals: 0 },
  { name: "wind_speed", label: "Wind", unit: "m/s", icon: "≋", binary: false, decimals: 1 },
  { name: "distance_to_target", label: "Dist", unit: "m", icon: "◎", binary: false, decimals: 0 },
  { name: "no_fly_zone", label: "NFZ", unit: "", icon: "⛔", binary: true, decimals: 0 },
];

export function attrIndex(name: string): number {
  const i = ATTRS.findIndex((a) => a.name === name);
  if (i < 0) throw new Error(`unknown attribute ${name}`);
  return i;
}

export function formatValue(attrIdx: number, value: number): string {
  const meta = ATTRS[attrIdx];
  if (meta.binary) {
    return meta.name === "rotor" ? (value >= 0.5 ? "on" : "OFF") : value >= 0.5 ? "IN" : "out";
  }
  const text = value.toFixed(meta.decimals);
  return meta.unit ? `${text} ${meta.unit}` : text;
}
