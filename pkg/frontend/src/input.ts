import { ClientInput, Vec2 } from './protocol.js'

// Synthetic controller pose: no hand tracking in the browser, so the
// controller sits a fixed reach along the aim direction at hand height.
// Shown in the HUD so operators know what the numbers mean.
export interface InputConfig {
    walkSpeed: number // m/s commanded by WASD (server clamps at 0.6)
    reach: number // controller offset from the avatar along aim, m
    handHeight: number // controller z, m
}

export const DEFAULT_INPUT_CONFIG: InputConfig = {
    walkSpeed: 0.5,
    reach: 0.5,
    handHeight: 1.4,
}

export interface InputState {
    keys: Set<string> // lowercase key names currently held
    aim: Vec2 // pointer aim direction, world frame (not necessarily unit)
    triggerHeld: boolean
}

export const idleInput = (): InputState => ({
    keys: new Set(),
    aim: { x: 1, y: 0 },
    triggerHeld: false,
})

const norm = (v: Vec2): number => Math.hypot(v.x, v.y)

// WASD in the avatar's frame: W forward along yaw, A strafes left.
// The combined direction is normalized so diagonals are not faster.
export const inputToMessage = (
    input: InputState,
    avatar: Vec2,
    seq: number,
    config: InputConfig = DEFAULT_INPUT_CONFIG,
): ClientInput => {
    const aimN = norm(input.aim)
    const yaw = aimN > 0 ? Math.atan2(input.aim.y, input.aim.x) : 0

    let fwd = 0
    let side = 0
    if (input.keys.has('w')) fwd += 1
    if (input.keys.has('s')) fwd -= 1
    if (input.keys.has('a')) side += 1
    if (input.keys.has('d')) side -= 1
    let mx = 0
    let my = 0
    const mag = Math.hypot(fwd, side)
    if (mag > 0) {
        const c = Math.cos(yaw)
        const s = Math.sin(yaw)
        // forward = (cos yaw, sin yaw), left = (-sin yaw, cos yaw)
        mx = ((fwd * c - side * s) / mag) * config.walkSpeed
        my = ((fwd * s + side * c) / mag) * config.walkSpeed
    }

    const ux = aimN > 0 ? input.aim.x / aimN : 1
    const uy = aimN > 0 ? input.aim.y / aimN : 0
    return {
        type: 'input',
        seq,
        mode: 'direct',
        direct: { move_x: mx, move_y: my, yaw },
        ctrl: {
            x: avatar.x + ux * config.reach,
            y: avatar.y + uy * config.reach,
            z: config.handHeight,
        },
        trigger: input.triggerHeld,
    }
}

export const inputsEqual = (a: ClientInput, b: ClientInput): boolean =>
    a.direct.move_x === b.direct.move_x &&
    a.direct.move_y === b.direct.move_y &&
    a.direct.yaw === b.direct.yaw &&
    a.ctrl.x === b.ctrl.x &&
    a.ctrl.y === b.ctrl.y &&
    a.ctrl.z === b.ctrl.z &&
    a.trigger === b.trigger
