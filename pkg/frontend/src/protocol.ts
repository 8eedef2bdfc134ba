// JSON message schema spoken over the /session WebSocket. The server is
// authoritative; the client only sends `hello`, `input` and `bye`.

export interface Vec2 {
    x: number
    y: number
}

export interface WelcomeMessage {
    type: 'welcome'
    session_id: string
    config_digest: string
    config: unknown
}

export interface StateTree {
    id: number
    x: number
    y: number
    stage: number
    stage_index: number
}

export interface StateProjectile {
    id: number
    x: number
    y: number
    z: number
}

export interface StateMessage {
    type: 'state'
    tick: number
    time_s: number
    participant: { x: number; y: number; z: number; yaw: number }
    controller: { x: number; y: number; z: number }
    platform: { dx: number; dy: number; vx: number; vy: number }
    trees: StateTree[]
    projectiles: StateProjectile[]
    events: EventMessage[]
}

export interface EventMessage {
    type: 'event'
    tick: number
    time_s: number
    kind: string
    object_id?: number
    tree_id?: number
}

export interface ErrorMessage {
    type: 'error'
    code: string
}

export interface ByeMessage {
    type: 'bye'
    session_id?: string
}

export type ServerMessage =
    | WelcomeMessage
    | StateMessage
    | EventMessage
    | ErrorMessage
    | ByeMessage

export interface ClientInput {
    type: 'input'
    seq: number
    mode: 'direct'
    direct: { move_x: number; move_y: number; yaw: number }
    ctrl: { x: number; y: number; z: number }
    trigger: boolean
}
