import { inputsEqual, inputToMessage, InputState, InputConfig, DEFAULT_INPUT_CONFIG } from './input.js'
import { ClientInput, ServerMessage, Vec2 } from './protocol.js'

export const HEARTBEAT_HZ = 20

// The bits of WebSocket we use, so tests can substitute a fake.
export interface SocketLike {
    readyState: number
    send(data: string): void
    close(): void
}

export interface SessionClientOpts {
    config?: InputConfig
    onMessage?: (msg: ServerMessage) => void
    onStatus?: (connected: boolean) => void
}

// Owns the outgoing half of the protocol: strictly increasing seq,
// send-on-change plus a 20 Hz heartbeat, and at most one input buffered
// while the socket is down.
export class SessionClient {
    private socket: SocketLike | null = null
    private seq = 0
    private lastSent: ClientInput | null = null
    private pending: ClientInput | null = null
    private readonly config: InputConfig
    private readonly opts: SessionClientOpts

    constructor(opts: SessionClientOpts = {}) {
        this.config = opts.config ?? DEFAULT_INPUT_CONFIG
        this.opts = opts
    }

    attach(socket: SocketLike): void {
        this.socket = socket
        this.send({ type: 'hello' })
        this.opts.onStatus?.(true)
        if (this.pending) {
            const buffered = this.pending
            this.pending = null
            this.sendInput(buffered)
        }
    }

    detach(): void {
        this.socket = null
        this.opts.onStatus?.(false)
    }

    get connected(): boolean {
        return this.socket !== null && this.socket.readyState === 1
    }

    handleRaw(data: string): void {
        let msg: ServerMessage
        try {
            msg = JSON.parse(data)
        } catch {
            return
        }
        this.opts.onMessage?.(msg)
    }

    // Called on every input change and from the heartbeat timer.
    pushInput(input: InputState, avatar: Vec2, force = false): void {
        const msg = inputToMessage(input, avatar, this.seq + 1, this.config)
        if (!this.connected) {
            msg.seq = 0 // reassigned on flush so seq stays monotone
            this.pending = msg // latest-wins, 1 deep
            return
        }
        if (!force && this.lastSent && inputsEqual(msg, this.lastSent)) return
        this.sendInput(msg)
    }

    heartbeat(input: InputState, avatar: Vec2): void {
        this.pushInput(input, avatar, true)
    }

    bye(): void {
        this.send({ type: 'bye' })
    }

    private sendInput(msg: ClientInput): void {
        this.seq += 1
        msg.seq = this.seq
        this.lastSent = msg
        this.send(msg)
    }

    private send(obj: unknown): void {
        if (this.socket && this.socket.readyState === 1) {
            this.socket.send(JSON.stringify(obj))
        }
    }
}
